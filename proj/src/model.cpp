#include "model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "parallel.hpp"

namespace hcf {

using json = nlohmann::json;

namespace {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void check_lambda(double lambda) {
  if (!(lambda > 0.0 && lambda < 0.5))
    throw_usage("lambda must lie in (0, 0.5)");
}

}  // namespace

void HcfModel::validate() const {
  check_lambda(lambda);
  if (bound <= 0.0) throw_usage("bound B must be positive");
  if (theta.size() != spec.dim())
    throw_usage("theta dimension does not match the feature spec");
  for (double t : theta)
    if (std::abs(t) > bound + 1e-12)
      throw_usage("theta leaves the hypothesis box [-B, B]");
}

ProbabilityMatrix::ProbabilityMatrix(std::vector<LineId> nodes) : nodes_(std::move(nodes)) {
  std::sort(nodes_.begin(), nodes_.end());
  p_.assign(nodes_.size() * nodes_.size(), 0.0);
}

int ProbabilityMatrix::node_index(LineId id) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id);
  if (it == nodes_.end() || *it != id) return -1;
  return static_cast<int>(it - nodes_.begin());
}

double ProbabilityMatrix::at(LineId u, LineId v) const {
  int ui = node_index(u), vi = node_index(v);
  if (ui < 0 || vi < 0) throw_data("unknown line id in probability lookup");
  return at_index(ui, vi);
}

void ProbabilityMatrix::set(LineId u, LineId v, double p) {
  int ui = node_index(u), vi = node_index(v);
  if (ui < 0 || vi < 0) throw_data("unknown line id in probability matrix");
  set_index(ui, vi, p);
}

std::string ProbabilityMatrix::to_csv(double threshold) const {
  std::ostringstream out;
  out << "# nodes";
  for (LineId id : nodes_) out << ',' << id;
  out << "\nu,v,p\n";
  for (std::size_t ui = 0; ui < nodes_.size(); ++ui)
    for (std::size_t vi = 0; vi < nodes_.size(); ++vi) {
      if (ui == vi) continue;
      double p = at_index(static_cast<int>(ui), static_cast<int>(vi));
      if (p < threshold) continue;
      out << nodes_[ui] << ',' << nodes_[vi] << ',' << format_real(p) << '\n';
    }
  return out.str();
}

ProbabilityMatrix ProbabilityMatrix::from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::vector<LineId> nodes;
  struct Row {
    LineId u, v;
    double p;
  };
  std::vector<Row> rows;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind("# nodes", 0) == 0) {
      std::istringstream ls(line.substr(7));
      std::string tok;
      while (std::getline(ls, tok, ','))
        if (!tok.empty()) nodes.push_back(std::stoll(tok));
      continue;
    }
    if (line[0] == '#' || line.rfind("u,v,p", 0) == 0) continue;
    std::istringstream ls(line);
    std::string a, b, c;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c))
      throw_data("bad probability CSV row at line " + std::to_string(line_no));
    try {
      rows.push_back({std::stoll(a), std::stoll(b), std::stod(c)});
    } catch (const std::exception&) {
      throw_data("bad probability CSV value at line " + std::to_string(line_no));
    }
  }
  if (nodes.empty()) {
    for (const Row& r : rows) {
      nodes.push_back(r.u);
      nodes.push_back(r.v);
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  }
  if (nodes.empty()) throw_data("probability CSV contains no nodes");
  ProbabilityMatrix m(nodes);
  for (const Row& r : rows) {
    if (!(r.p >= 0.0 && r.p <= 1.0)) throw_data("probability outside [0, 1]");
    m.set(r.u, r.v, r.p);
  }
  return m;
}

double influence_probability(const HcfModel& model, std::span<const double> x) {
  if (x.size() != model.dim()) throw_usage("feature vector dimension mismatch");
  double p = sigmoid(dot(model.theta, x));
  return std::clamp(p, model.lambda, 1.0 - model.lambda);
}

ProbabilityMatrix probability_matrix(const HcfModel& model, const FeatureMatrix& features) {
  model.validate();
  if (features.dim() != model.dim())
    throw_usage("feature matrix dimension does not match the model");
  ProbabilityMatrix out(features.nodes());
  const int n = static_cast<int>(features.node_count());
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t ui) {
    for (int vi = 0; vi < n; ++vi) {
      if (static_cast<int>(ui) == vi) continue;
      double p = influence_probability(model, features.at_index(static_cast<int>(ui), vi));
      out.set_index(static_cast<int>(ui), vi, p);
    }
  });
  return out;
}

double activation_probability(const HcfModel& model, const FeatureMatrix& features,
                              const std::vector<LineId>& activators, LineId target) {
  if (activators.empty()) throw_usage("activator set must be non-empty");
  double log_q = 0.0;  // log prod (1 - p_u)
  for (LineId u : activators) {
    if (u == target) throw_usage("target must not be an activator");
    log_q += std::log1p(-influence_probability(model, features.at(u, target)));
  }
  const double v = static_cast<double>(activators.size());
  log_q = std::clamp(log_q, v * std::log(model.lambda), std::log1p(-model.lambda));
  return -std::expm1(log_q);
}

LikelihoodProblem::LikelihoodProblem(const FeatureMatrix& features,
                                     const SampleSet& samples, double lambda)
    : features_(features), samples_(samples), lambda_(lambda), dim_(features.dim()) {
  check_lambda(lambda);
  if (samples.samples.empty()) throw_usage("sample set is empty");
  const std::size_t n = features.node_count();
  std::unordered_map<std::size_t, std::uint32_t> slot_of_pair;
  sample_begin_.reserve(samples.samples.size() + 1);
  sample_begin_.push_back(0);
  for (const Sample& s : samples.samples) {
    int vi = features.node_index(s.target);
    if (vi < 0) throw_data("sample target " + std::to_string(s.target) +
                           " missing from the feature matrix");
    for (LineId u : s.activators) {
      int ui = features.node_index(u);
      if (ui < 0) throw_data("sample activator " + std::to_string(u) +
                             " missing from the feature matrix");
      if (ui == vi) throw_data("sample has its target among the activators");
      std::size_t offset = static_cast<std::size_t>(ui) * n + static_cast<std::size_t>(vi);
      auto [it, inserted] = slot_of_pair.try_emplace(
          offset, static_cast<std::uint32_t>(used_pair_offsets_.size()));
      if (inserted) used_pair_offsets_.push_back(offset);
      pair_of_entry_.push_back(it->second);
    }
    sample_begin_.push_back(pair_of_entry_.size());
  }
}

// Computes the sample's log-likelihood contribution (unweighted); optionally
// the gradient coefficient (y/P - 1), zero when a clamp is active, and
// q = prod(1 - p).
double LikelihoodProblem::sample_value(std::span<const double> p_used, std::size_t s,
                                       double* coef, double* q_out) const {
  const Sample& sample = samples_.samples[s];
  double log_q = 0.0;
  for (std::size_t e = sample_begin_[s]; e < sample_begin_[s + 1]; ++e)
    log_q += std::log1p(-p_used[pair_of_entry_[e]]);
  const double v = static_cast<double>(sample.activators.size());
  const double lo = v * std::log(lambda_);
  const double hi = std::log1p(-lambda_);
  double clamped = std::clamp(log_q, lo, hi);
  const bool clamp_active = clamped != log_q;
  const double p_sample = -std::expm1(clamped);  // P in [lambda, 1 - lambda^V]
  if (q_out) *q_out = std::exp(clamped);
  double value;
  if (sample.positive) {
    value = std::log(p_sample);
    if (coef) *coef = clamp_active ? 0.0 : std::exp(clamped) / p_sample;  // 1/P - 1
  } else {
    value = clamped;  // log(1 - P), exact in log space
    if (coef) *coef = clamp_active ? 0.0 : -1.0;
  }
  return value;
}

double LikelihoodProblem::value(std::span<const double> theta) const {
  const std::size_t n = features_.node_count();
  std::vector<double> p_used(used_pair_offsets_.size());
  parallel_for(p_used.size(), [&](std::size_t k) {
    std::size_t offset = used_pair_offsets_[k];
    double p = sigmoid(dot(theta, features_.at_index(static_cast<int>(offset / n),
                                                     static_cast<int>(offset % n))));
    p_used[k] = std::clamp(p, lambda_, 1.0 - lambda_);
  });
  struct Acc {
    double value = 0.0;
  };
  Acc total = parallel_reduce<Acc>(
      samples_.samples.size(), 1024, Acc{},
      [&](std::size_t lo, std::size_t hi) {
        Acc acc;
        for (std::size_t s = lo; s < hi; ++s)
          acc.value += static_cast<double>(samples_.samples[s].multiplicity) *
                       sample_value(p_used, s, nullptr, nullptr);
        return acc;
      },
      [](Acc a, Acc b) {
        a.value += b.value;
        return a;
      });
  return total.value / static_cast<double>(samples_.total);
}

double LikelihoodProblem::value_and_gradient(std::span<const double> theta,
                                             std::span<double> grad) const {
  if (grad.size() != dim_) throw_usage("gradient buffer has wrong dimension");
  const std::size_t n = features_.node_count();
  std::vector<double> p_used(used_pair_offsets_.size());
  parallel_for(p_used.size(), [&](std::size_t k) {
    std::size_t offset = used_pair_offsets_[k];
    int ui = static_cast<int>(offset / n);
    int vi = static_cast<int>(offset % n);
    double p = sigmoid(dot(theta, features_.at_index(ui, vi)));
    p_used[k] = std::clamp(p, lambda_, 1.0 - lambda_);
  });

  struct Acc {
    double value = 0.0;
    std::vector<double> grad;
  };
  Acc init;
  init.grad.assign(dim_, 0.0);
  Acc total = parallel_reduce<Acc>(
      samples_.samples.size(), 1024, init,
      [&](std::size_t lo, std::size_t hi) {
        Acc acc;
        acc.grad.assign(dim_, 0.0);
        std::vector<double> xhat(dim_);
        for (std::size_t s = lo; s < hi; ++s) {
          const Sample& sample = samples_.samples[s];
          const double mult = static_cast<double>(sample.multiplicity);
          double coef = 0.0;
          acc.value += mult * sample_value(p_used, s, &coef, nullptr);
          if (coef == 0.0) continue;
          // xhat = sum over unclamped activator edges of p_uv * x_uv
          std::fill(xhat.begin(), xhat.end(), 0.0);
          for (std::size_t e = sample_begin_[s]; e < sample_begin_[s + 1]; ++e) {
            const double p = p_used[pair_of_entry_[e]];
            if (p <= lambda_ || p >= 1.0 - lambda_) continue;  // clamped edge
            std::size_t offset = used_pair_offsets_[pair_of_entry_[e]];
            auto x = features_.at_index(static_cast<int>(offset / n),
                                        static_cast<int>(offset % n));
            for (std::size_t j = 0; j < dim_; ++j) xhat[j] += p * x[j];
          }
          const double w = mult * coef;
          for (std::size_t j = 0; j < dim_; ++j) acc.grad[j] += w * xhat[j];
        }
        return acc;
      },
      [this](Acc a, Acc b) {
        if (b.grad.empty()) return a;
        if (a.grad.empty()) return b;
        a.value += b.value;
        for (std::size_t j = 0; j < dim_; ++j) a.grad[j] += b.grad[j];
        return a;
      });
  const double inv_m = 1.0 / static_cast<double>(samples_.total);
  for (std::size_t j = 0; j < dim_; ++j) grad[j] = total.grad[j] * inv_m;
  return total.value * inv_m;
}

std::vector<double> LikelihoodProblem::positive_probabilities(
    std::span<const double> theta) const {
  const std::size_t n = features_.node_count();
  std::vector<double> p_used(used_pair_offsets_.size());
  for (std::size_t k = 0; k < p_used.size(); ++k) {
    std::size_t offset = used_pair_offsets_[k];
    double p = sigmoid(dot(theta, features_.at_index(static_cast<int>(offset / n),
                                                     static_cast<int>(offset % n))));
    p_used[k] = std::clamp(p, lambda_, 1.0 - lambda_);
  }
  std::vector<double> out(samples_.samples.size(), 0.0);
  for (std::size_t s = 0; s < out.size(); ++s) {
    if (!samples_.samples[s].positive) continue;
    double q = 0.0;
    sample_value(p_used, s, nullptr, &q);
    out[s] = 1.0 - q;
  }
  return out;
}

double log_likelihood(const HcfModel& model, const FeatureMatrix& features,
                      const SampleSet& samples) {
  model.validate();
  LikelihoodProblem problem(features, samples, model.lambda);
  return problem.value(model.theta);
}

std::vector<double> gradient(const HcfModel& model, const FeatureMatrix& features,
                             const SampleSet& samples) {
  model.validate();
  LikelihoodProblem problem(features, samples, model.lambda);
  std::vector<double> grad(model.dim());
  problem.value_and_gradient(model.theta, grad);
  return grad;
}

ConcavityReport check_concavity(const HcfModel& model, const FeatureMatrix& features,
                                const SampleSet& samples) {
  model.validate();
  LikelihoodProblem problem(features, samples, model.lambda);
  std::vector<double> p_pos = problem.positive_probabilities(model.theta);

  // phi_uv = sum over positive samples covering uv of mult/P_s
  //        - sum over all samples covering uv of mult.
  std::map<std::pair<LineId, LineId>, double> phi;
  for (std::size_t s = 0; s < samples.samples.size(); ++s) {
    const Sample& sample = samples.samples[s];
    if (!sample.positive) continue;
    const double w = static_cast<double>(sample.multiplicity) / p_pos[s];
    for (LineId u : sample.activators) phi[{u, sample.target}] += w;
  }
  ConcavityReport report;
  report.covered_pairs = phi.size();
  if (phi.empty()) {
    report.guaranteed_concave = true;  // all-negative dataset
    return report;
  }
  for (const Sample& sample : samples.samples) {
    for (LineId u : sample.activators) {
      auto it = phi.find({u, sample.target});
      if (it != phi.end()) it->second -= static_cast<double>(sample.multiplicity);
    }
  }
  report.max_phi = std::numeric_limits<double>::lowest();
  for (const auto& [pair, value] : phi) {
    report.phi.emplace_back(pair.first, pair.second, value);
    report.max_phi = std::max(report.max_phi, value);
    if (value > 0.0) ++report.positive_phi;
  }
  report.guaranteed_concave = report.positive_phi == 0;
  return report;
}

double lipschitz_bound(std::size_t max_activators, double lambda) {
  check_lambda(lambda);
  if (max_activators == 0) throw_usage("activator-set size must be positive");
  return static_cast<double>(max_activators) * std::log(1.0 / lambda);
}

double lipschitz_bound(const SampleSet& samples, double lambda) {
  return lipschitz_bound(samples.max_activators, lambda);
}

double sample_complexity_bound(double epsilon, double delta, std::size_t dim,
                               std::size_t max_activators, double lambda, double bound) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw_usage("epsilon must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw_usage("delta must lie in (0, 1)");
  if (dim == 0 || max_activators == 0) throw_usage("d and V must be positive");
  check_lambda(lambda);
  if (bound <= 0.0) throw_usage("bound B must be positive");
  const double vlog = static_cast<double>(max_activators) * std::log(1.0 / lambda);
  const double lead = 6.0 * vlog / epsilon;
  const double cover = std::ceil(3.0 * bound * vlog / epsilon);
  const double inner =
      4.0 * static_cast<double>(dim) * std::log(cover) + 25.0 * std::log(8.0 / delta);
  return std::ceil(lead * lead * inner);
}

std::string model_to_json(const HcfModel& model) {
  json obj;
  obj["theta"] = model.theta;
  json normalization = json::array();
  for (std::size_t i = 0; i < model.spec.dim(); ++i)
    normalization.push_back({model.spec.lo[i], model.spec.hi[i]});
  obj["feature_spec"] = {{"names", model.spec.names}, {"normalization", normalization}};
  obj["lambda"] = model.lambda;
  obj["B"] = model.bound;
  return obj.dump(2);
}

HcfModel model_from_json(const std::string& text) {
  json obj = json::parse(text, nullptr, false);
  if (obj.is_discarded() || !obj.contains("theta") || !obj.contains("feature_spec") ||
      !obj.contains("lambda") || !obj.contains("B"))
    throw_data("bad model JSON");
  HcfModel model;
  model.theta = obj["theta"].get<std::vector<double>>();
  model.lambda = obj["lambda"].get<double>();
  model.bound = obj["B"].get<double>();
  const json& spec = obj["feature_spec"];
  model.spec.names = spec.at("names").get<std::vector<std::string>>();
  for (const auto& pair : spec.at("normalization")) {
    model.spec.lo.push_back(pair.at(0).get<double>());
    model.spec.hi.push_back(pair.at(1).get<double>());
  }
  model.validate();
  return model;
}

void save_model(const HcfModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data("cannot write model file: " + path);
  out << model_to_json(model) << '\n';
}

HcfModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace hcf
