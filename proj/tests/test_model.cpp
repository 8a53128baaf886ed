#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "helpers.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"

using namespace hcf;

namespace {

HcfModel make_model(std::vector<double> theta, double lambda = 1e-9, double bound = 10.0) {
  HcfModel m;
  m.spec = FeatureSpec::identity(theta.size());
  m.theta = std::move(theta);
  m.lambda = lambda;
  m.bound = bound;
  return m;
}

// Feature matrix over `ids` where x_{u,v} is set explicitly per pair.
FeatureMatrix features_from_pairs(
    const std::vector<LineId>& ids, std::size_t d,
    const std::vector<std::tuple<LineId, LineId, std::vector<double>>>& entries) {
  FeatureMatrix m(ids, FeatureSpec::identity(d));
  for (const auto& [u, v, x] : entries) {
    auto dst = m.at_mut(u, v);
    std::copy(x.begin(), x.end(), dst.begin());
  }
  return m;
}

Sample make_sample(std::vector<LineId> activators, LineId target, bool positive,
                   std::uint64_t mult = 1) {
  Sample s;
  s.activators = std::move(activators);
  std::sort(s.activators.begin(), s.activators.end());
  s.target = target;
  s.positive = positive;
  s.multiplicity = mult;
  return s;
}

SampleSet make_set(std::vector<Sample> samples) {
  SampleSet set;
  for (Sample& s : samples) {
    set.total += s.multiplicity;
    set.max_activators = std::max(set.max_activators, s.activators.size());
    set.samples.push_back(std::move(s));
  }
  return set;
}

// Random instance shared by the gradient and bound tests.
struct Instance {
  FeatureMatrix features;
  SampleSet samples;
  std::vector<double> theta;
};

Instance random_instance(Rng& rng, std::size_t d, std::size_t max_activators,
                         int n_samples, double theta_range) {
  const int n_nodes = static_cast<int>(max_activators) + 2 +
                      static_cast<int>(rng.below(3));
  std::vector<LineId> ids;
  for (int i = 1; i <= n_nodes; ++i) ids.push_back(i);
  Instance inst{testutil::random_features(ids, d, rng), {}, {}};
  std::vector<Sample> samples;
  for (int s = 0; s < n_samples; ++s) {
    std::size_t v_s = 1 + rng.below(max_activators);
    std::vector<LineId> pool = ids;
    std::vector<LineId> activators;
    for (std::size_t i = 0; i < v_s; ++i) {
      std::size_t pick = rng.below(pool.size());
      activators.push_back(pool[pick]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    LineId target = pool[rng.below(pool.size())];
    samples.push_back(make_sample(activators, target, rng.bernoulli(0.5),
                                  1 + rng.below(3)));
  }
  inst.samples = make_set(std::move(samples));
  inst.theta.resize(d);
  for (auto& t : inst.theta) t = rng.uniform(-theta_range, theta_range);
  return inst;
}

}  // namespace

TEST_CASE("influence probability") {
  SUBCASE("zero parameters give one half") {
    auto m = make_model({0.0, 0.0, 0.0});
    std::vector<double> x{0.9, -0.5, 0.1};
    CHECK(influence_probability(m, x) == doctest::Approx(0.5));
  }
  SUBCASE("deep negative logits clamp at lambda") {
    auto m = make_model({-60.0});
    std::vector<double> x{1.0};
    CHECK(influence_probability(m, x) == doctest::Approx(1e-9).epsilon(1e-15));
    auto hi = make_model({60.0});
    CHECK(influence_probability(hi, x) == doctest::Approx(1.0 - 1e-9));
  }
  SUBCASE("logistic value") {
    auto m = make_model({1.0, -1.0});
    std::vector<double> x{0.5, 0.25};
    CHECK(influence_probability(m, x) ==
          doctest::Approx(1.0 / (1.0 + std::exp(-0.25))).epsilon(1e-9));
    CHECK(influence_probability(m, x) == doctest::Approx(0.562177).epsilon(1e-6));
  }
  SUBCASE("dimension mismatch is rejected") {
    auto m = make_model({1.0});
    std::vector<double> x{1.0, 2.0};
    CHECK_THROWS_AS(influence_probability(m, x), Error);
  }
}

TEST_CASE("probability matrix equals the entrywise sigmoid oracle") {
  Rng rng(99);
  std::vector<LineId> ids{1, 2, 3};
  FeatureMatrix features = testutil::random_features(ids, 4, rng);
  auto model = make_model({0.7, -1.3, 0.2, 0.5});
  ProbabilityMatrix pmat = probability_matrix(model, features);
  int entries = 0;
  for (LineId u : ids)
    for (LineId v : ids) {
      if (u == v) continue;
      ++entries;
      auto x = features.at(u, v);
      double t = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) t += model.theta[k] * x[k];
      CHECK(pmat.at(u, v) == doctest::Approx(1.0 / (1.0 + std::exp(-t))).epsilon(1e-12));
    }
  CHECK(entries == 6);

  SUBCASE("zero theta gives a flat 0.5 matrix") {
    auto flat = probability_matrix(make_model({0, 0, 0, 0}), features);
    for (LineId u : ids)
      for (LineId v : ids)
        if (u != v) CHECK(flat.at(u, v) == doctest::Approx(0.5));
  }

  SUBCASE("threshold export drops exactly the entries below it") {
    std::string csv = pmat.to_csv(0.5);
    ProbabilityMatrix filtered = ProbabilityMatrix::from_csv(csv);
    for (LineId u : ids)
      for (LineId v : ids) {
        if (u == v) continue;
        double p = pmat.at(u, v);
        CHECK(filtered.at(u, v) == doctest::Approx(p < 0.5 ? 0.0 : p));
      }
  }

  SUBCASE("the 0.01 threshold boundary keeps entries at exactly 0.01") {
    ProbabilityMatrix m({1, 2, 3});
    m.set(1, 2, 0.0099);
    m.set(2, 1, 0.01);
    m.set(1, 3, 0.25);
    m.set(3, 1, 0.0);
    ProbabilityMatrix filtered = ProbabilityMatrix::from_csv(m.to_csv(0.01));
    CHECK(filtered.at(1, 2) == 0.0);
    CHECK(filtered.at(2, 1) == 0.01);
    CHECK(filtered.at(1, 3) == 0.25);
    CHECK(filtered.nodes() == m.nodes());  // universe survives filtering
  }
}

TEST_CASE("activation probability") {
  std::vector<LineId> ids{1, 2, 3, 4};
  // p(1->4) = 0.1, p(2->4) = 0.2, p(3->4) = 0.3 via logit features, theta = 1.
  auto logit = [](double p) { return std::log(p / (1.0 - p)); };
  FeatureMatrix features = features_from_pairs(
      ids, 1,
      {{1, 4, {logit(0.1)}}, {2, 4, {logit(0.2)}}, {3, 4, {logit(0.3)}},
       {1, 2, {logit(0.5)}}, {3, 2, {logit(0.5)}}});
  auto model = make_model({1.0});

  CHECK(activation_probability(model, features, {1}, 2) == doctest::Approx(0.5));
  CHECK(activation_probability(model, features, {1, 3}, 2) == doctest::Approx(0.75));
  CHECK(activation_probability(model, features, {1, 2, 3}, 4) ==
        doctest::Approx(1.0 - 0.9 * 0.8 * 0.7).epsilon(1e-12));
  CHECK(activation_probability(model, features, {1, 2, 3}, 4) ==
        doctest::Approx(testutil::brute_force_activation({0.1, 0.2, 0.3})).epsilon(1e-12));
  CHECK_THROWS_AS(activation_probability(model, features, {}, 2), Error);
  CHECK_THROWS_AS(activation_probability(model, features, {2}, 2), Error);
}

TEST_CASE("activation probability equals Bernoulli enumeration on random draws") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    std::size_t k = 1 + rng.below(10);
    std::vector<LineId> ids;
    for (std::size_t i = 1; i <= k + 1; ++i) ids.push_back(static_cast<LineId>(i));
    FeatureMatrix features = testutil::random_features(ids, 3, rng);
    auto model = make_model({rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)});
    std::vector<LineId> activators(ids.begin(), ids.end() - 1);
    LineId target = ids.back();
    std::vector<double> ps;
    for (LineId u : activators)
      ps.push_back(influence_probability(model, features.at(u, target)));
    double expected = testutil::brute_force_activation(ps);
    CHECK(activation_probability(model, features, activators, target) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("log-likelihood on the worked two-sample set") {
  std::vector<LineId> ids{1, 2, 3};
  Rng rng(5);
  FeatureMatrix features = testutil::random_features(ids, 2, rng);
  auto model = make_model({0.0, 0.0});  // every p is 0.5

  // Positive with two activators: P = 0.75.
  auto pos = make_set({make_sample({1, 2}, 3, true)});
  CHECK(log_likelihood(model, features, pos) ==
        doctest::Approx(std::log(0.75)).epsilon(1e-9));

  // Negative with two activators: log(1 - 0.75).
  auto neg = make_set({make_sample({1, 2}, 3, false)});
  CHECK(log_likelihood(model, features, neg) ==
        doctest::Approx(std::log(0.25)).epsilon(1e-9));

  // Equal-multiplicity mean.
  auto both = make_set({make_sample({1, 2}, 3, true), make_sample({1, 2}, 3, false)});
  CHECK(log_likelihood(model, features, both) ==
        doctest::Approx(0.5 * (std::log(0.75) + std::log(0.25))).epsilon(1e-6));
  CHECK(log_likelihood(model, features, both) == doctest::Approx(-0.836988).epsilon(1e-6));
}

TEST_CASE("per-sample log-likelihood lies in the proof interval") {
  Rng rng(808);
  const double lambda = 1e-9;
  for (int trial = 0; trial < 200; ++trial) {
    auto inst = random_instance(rng, 4, 6, 1, 3.0);
    const Sample& s = inst.samples.samples[0];
    auto model = make_model(inst.theta, lambda);
    double value = log_likelihood(model, inst.features, inst.samples);
    const double v_s = static_cast<double>(s.activators.size());
    CHECK(value >= v_s * std::log(lambda) - 1e-12);
    CHECK(value <= std::log1p(-std::pow(lambda, v_s)) + 1e-12);
  }
}

TEST_CASE("gradient on the two worked examples") {
  std::vector<LineId> ids{1, 2};
  SUBCASE("positive sample") {
    FeatureMatrix features = features_from_pairs(ids, 2, {{1, 2, {0.4, -0.6}}});
    auto model = make_model({0.0, 0.0});
    auto set = make_set({make_sample({1}, 2, true)});
    auto grad = gradient(model, features, set);
    CHECK(grad[0] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(grad[1] == doctest::Approx(-0.3).epsilon(1e-12));
  }
  SUBCASE("negative sample") {
    FeatureMatrix features = features_from_pairs(ids, 2, {{1, 2, {1.0, 0.0}}});
    auto model = make_model({0.0, 0.0});
    auto set = make_set({make_sample({1}, 2, false)});
    auto grad = gradient(model, features, set);
    CHECK(grad[0] == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(grad[1] == doctest::Approx(0.0));
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(314159);
  for (int trial = 0; trial < 60; ++trial) {
    std::size_t d = 2 + rng.below(9);  // up to 10
    auto inst = random_instance(rng, d, 5, 3 + static_cast<int>(rng.below(6)), 1.0);
    LikelihoodProblem problem(inst.features, inst.samples, 1e-9);
    std::vector<double> analytic(d);
    problem.value_and_gradient(inst.theta, analytic);
    auto numeric = testutil::finite_diff_gradient(
        [&](const std::vector<double>& point) { return problem.value(point); },
        inst.theta);
    double scale = 1e-6, diff = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
      diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    }
    INFO("trial ", trial);
    CHECK(diff / scale < 1e-6);
  }
}

TEST_CASE("gradient is zero through an active clamp") {
  std::vector<LineId> ids{1, 2};
  FeatureMatrix features = features_from_pairs(ids, 1, {{1, 2, {1.0}}});
  auto model = make_model({-60.0}, 1e-9, 100.0);  // p clamps at lambda
  auto set = make_set({make_sample({1}, 2, true)});
  auto grad = gradient(model, features, set);
  CHECK(grad[0] == 0.0);
}

TEST_CASE("concavity diagnostic") {
  SUBCASE("all-negative sets are guaranteed concave") {
    Rng rng(11);
    auto inst = random_instance(rng, 3, 4, 10, 1.0);
    for (Sample& s : inst.samples.samples) s.positive = false;
    auto model = make_model(inst.theta, 1e-9);
    auto report = check_concavity(model, inst.features, inst.samples);
    CHECK(report.guaranteed_concave);
    CHECK(report.covered_pairs == 0);
  }

  SUBCASE("worked phi value: one positive at 0.8 among three covering samples") {
    std::vector<LineId> ids{1, 2};
    double x = std::log(0.8 / 0.2);
    FeatureMatrix features = features_from_pairs(ids, 1, {{1, 2, {x}}});
    auto model = make_model({1.0});
    auto set = make_set(
        {make_sample({1}, 2, true, 1), make_sample({1}, 2, false, 2)});
    auto report = check_concavity(model, features, set);
    REQUIRE(report.phi.size() == 1);
    CHECK(std::get<0>(report.phi[0]) == 1);
    CHECK(std::get<1>(report.phi[0]) == 2);
    CHECK(std::get<2>(report.phi[0]) == doctest::Approx(1.0 / 0.8 - 3.0).epsilon(1e-12));
    CHECK(report.guaranteed_concave);  // -1.75 <= 0
  }

  SUBCASE("a certified mixed dataset has a negative semidefinite Hessian") {
    std::vector<LineId> ids{1, 2, 3};
    Rng rng(23);
    FeatureMatrix features = testutil::random_features(ids, 3, rng);
    auto model = make_model({0.0, 0.0, 0.0});
    // Positive covered pairs see phi = 1/0.75 - 3 < 0 at theta = 0.
    auto set = make_set({make_sample({1, 2}, 3, true, 1),
                         make_sample({1, 2}, 3, false, 2),
                         make_sample({3}, 1, false, 2)});
    auto report = check_concavity(model, features, set);
    REQUIRE(report.guaranteed_concave);
    LikelihoodProblem problem(features, set, model.lambda);
    auto hessian = testutil::finite_diff_hessian(
        [&](const std::vector<double>& point) { return problem.value(point); },
        model.theta);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(hessian);
    CHECK(eigs.eigenvalues().maxCoeff() <= 1e-8);
  }

  SUBCASE("positive-only construction is not guaranteed") {
    std::vector<LineId> ids{1, 2, 3};
    Rng rng(17);
    FeatureMatrix features = testutil::random_features(ids, 3, rng);
    auto model = make_model({0.0, 0.0, 0.0});
    // {((V \ u, u), 1) : u in V}
    auto set = make_set({make_sample({2, 3}, 1, true), make_sample({1, 3}, 2, true),
                         make_sample({1, 2}, 3, true)});
    auto report = check_concavity(model, features, set);
    CHECK_FALSE(report.guaranteed_concave);
    CHECK(report.max_phi == doctest::Approx(1.0 / 0.75 - 1.0).epsilon(1e-12));
  }
}

TEST_CASE("Lipschitz bound closed form and empirical check") {
  CHECK(lipschitz_bound(1, std::exp(-1.0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(lipschitz_bound(3, 1e-9) == doctest::Approx(62.1698).epsilon(1e-4));
  CHECK_THROWS_AS(lipschitz_bound(3, 0.7), Error);

  Rng rng(246);
  for (int trial = 0; trial < 1000; ++trial) {
    auto inst = random_instance(rng, 3, 5, 1, 3.0);
    LikelihoodProblem problem(inst.features, inst.samples, 1e-9);
    std::vector<double> grad(3);
    problem.value_and_gradient(inst.theta, grad);
    double norm = 0.0;
    for (double g : grad) norm = std::max(norm, std::abs(g));
    CHECK(norm <= lipschitz_bound(inst.samples.samples[0].activators.size(), 1e-9));
  }
}

TEST_CASE("sample complexity bound") {
  SUBCASE("halving epsilon at least quadruples m") {
    double m1 = sample_complexity_bound(0.2, 0.05, 10, 4, 1e-9, 10.0);
    double m2 = sample_complexity_bound(0.1, 0.05, 10, 4, 1e-9, 10.0);
    CHECK(m2 >= 4.0 * m1 * (1.0 - 1e-12));
  }
  SUBCASE("monotone in d and V") {
    double prev = 0.0;
    for (std::size_t d : {1, 2, 5, 10, 25, 50}) {
      double m = sample_complexity_bound(0.1, 0.05, d, 5, 1e-9, 10.0);
      CHECK(m >= prev);
      prev = m;
    }
    prev = 0.0;
    for (std::size_t v : {1, 2, 5, 10, 50}) {
      double m = sample_complexity_bound(0.1, 0.05, 25, v, 1e-9, 10.0);
      CHECK(m >= prev);
      prev = m;
    }
  }
  SUBCASE("matches a high-precision evaluation of the formula") {
    const double eps = 0.1, delta = 0.05, bound = 10.0, lambda = 1e-9;
    const std::size_t d = 25, v = 5;
    long double vlog = 5.0L * std::log(1.0L / static_cast<long double>(lambda));
    long double lead = 6.0L * vlog / static_cast<long double>(eps);
    long double cover = std::ceil(3.0L * bound * vlog / eps);
    long double inner = 4.0L * d * std::log(cover) + 25.0L * std::log(8.0L / delta);
    long double expected = std::ceil(lead * lead * inner);
    CHECK(sample_complexity_bound(eps, delta, d, v, lambda, bound) ==
          doctest::Approx(static_cast<double>(expected)).epsilon(1e-12));
  }
  SUBCASE("frozen values from an independent evaluation") {
    CHECK(sample_complexity_bound(0.1, 0.05, 25, 5, 1e-9, 10.0) ==
          doctest::Approx(44886276769.0));
    CHECK(sample_complexity_bound(0.2, 0.1, 10, 3, 1e-9, 5.0) ==
          doctest::Approx(1556478932.0));
    CHECK(sample_complexity_bound(0.05, 0.01, 25, 10, 1e-6, 10.0) ==
          doctest::Approx(357208519845.0));
  }
  SUBCASE("domain violations are rejected") {
    CHECK_THROWS_AS(sample_complexity_bound(0.0, 0.05, 10, 4, 1e-9, 10.0), Error);
    CHECK_THROWS_AS(sample_complexity_bound(0.1, 1.0, 10, 4, 1e-9, 10.0), Error);
    CHECK_THROWS_AS(sample_complexity_bound(0.1, 0.05, 10, 4, 0.6, 10.0), Error);
    CHECK_THROWS_AS(sample_complexity_bound(0.1, 0.05, 10, 4, 1e-9, -1.0), Error);
  }
}

TEST_CASE("model JSON round-trip") {
  auto model = make_model({0.25, -1.5, 3.0}, 1e-7, 5.0);
  std::string text = model_to_json(model);
  HcfModel again = model_from_json(text);
  CHECK(again.theta == model.theta);
  CHECK(again.lambda == model.lambda);
  CHECK(again.bound == model.bound);
  CHECK(again.spec.names == model.spec.names);
  CHECK(model_to_json(again) == text);
  CHECK_THROWS_AS(model_from_json("{}"), Error);
}

TEST_CASE("likelihood evaluation is bit-identical across thread counts") {
  Rng rng(6060);
  auto inst = random_instance(rng, 6, 5, 50, 1.0);
  LikelihoodProblem problem(inst.features, inst.samples, 1e-9);
  int original = thread_count();
  std::vector<double> g1(6), g4(6);
  set_thread_count(1);
  double v1 = problem.value_and_gradient(inst.theta, g1);
  set_thread_count(4);
  double v4 = problem.value_and_gradient(inst.theta, g4);
  set_thread_count(original);
  CHECK(v1 == v4);
  for (std::size_t i = 0; i < 6; ++i) CHECK(g1[i] == g4[i]);
}
