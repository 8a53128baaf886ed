#include "optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <thread>

#include <json.hpp>

#include "parallel.hpp"
#include "rng.hpp"

namespace hcf {

using json = nlohmann::json;

namespace {

struct HistoryPair {
  std::vector<double> s;  // x_{k+1} - x_k
  std::vector<double> y;  // g_{k+1} - g_k
  double rho = 0.0;       // 1 / (y . s)
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double sup_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void project_box(std::vector<double>& x, double bound) {
  for (double& xi : x) xi = std::clamp(xi, -bound, bound);
}

// Sup norm of the projected gradient: how far a unit gradient step can move
// inside the box. Zero exactly at a box-constrained stationary point.
double projected_grad_norm(const std::vector<double>& x, const std::vector<double>& grad,
                           double bound) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double moved = std::clamp(x[i] - grad[i], -bound, bound);
    m = std::max(m, std::abs(x[i] - moved));
  }
  return m;
}

// Minimizes f = -likelihood over the box from a single starting point.
StartReport minimize_from(const LikelihoodProblem& problem, std::vector<double> x,
                          double bound, const OptimizerConfig& config,
                          std::vector<double>& best_x) {
  const std::size_t d = x.size();
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 60;

  StartReport report;
  std::vector<double> grad(d), direction(d), trial(d), trial_grad(d);

  auto eval = [&](const std::vector<double>& point, std::vector<double>& g) {
    double likelihood = problem.value_and_gradient(point, g);
    for (double& gi : g) gi = -gi;  // gradient of f
    return -likelihood;
  };

  double f = eval(x, grad);
  if (!std::isfinite(f))
    throw_numeric("log-likelihood is not finite at the starting point");
  report.likelihood_path.push_back(-f);

  std::deque<HistoryPair> history;
  for (int iter = 0; iter < config.max_iters; ++iter) {
    double pg = projected_grad_norm(x, grad, bound);
    if (pg <= config.grad_tol) {
      report.converged = true;
      break;
    }

    // Two-loop recursion on the stored curvature pairs.
    for (std::size_t i = 0; i < d; ++i) direction[i] = -grad[i];
    std::vector<double> alpha(history.size());
    for (std::size_t h = history.size(); h-- > 0;) {
      alpha[h] = history[h].rho * dot(history[h].s, direction);
      for (std::size_t i = 0; i < d; ++i) direction[i] -= alpha[h] * history[h].y[i];
    }
    if (!history.empty()) {
      const HistoryPair& last = history.back();
      double scale = dot(last.s, last.y) / dot(last.y, last.y);
      for (double& di : direction) di *= scale;
    }
    for (std::size_t h = 0; h < history.size(); ++h) {
      double beta = history[h].rho * dot(history[h].y, direction);
      for (std::size_t i = 0; i < d; ++i)
        direction[i] += (alpha[h] - beta) * history[h].s[i];
    }
    if (dot(direction, grad) >= 0.0) {
      // Not a descent direction; fall back to steepest descent.
      history.clear();
      for (std::size_t i = 0; i < d; ++i) direction[i] = -grad[i];
    }

    // Backtracking projected line search with an Armijo-style decrease
    // measured along the projected step.
    double step = 1.0;
    double f_new = f;
    bool accepted = false;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      for (std::size_t i = 0; i < d; ++i) trial[i] = x[i] + step * direction[i];
      project_box(trial, bound);
      double decrease = 0.0;  // grad . (trial - x), negative for useful steps
      for (std::size_t i = 0; i < d; ++i) decrease += grad[i] * (trial[i] - x[i]);
      if (decrease >= 0.0) {
        step *= 0.5;
        continue;
      }
      f_new = eval(trial, trial_grad);
      if (std::isfinite(f_new) && f_new <= f + kArmijo * decrease) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // line search stalled; x is as good as it gets

    HistoryPair pair;
    pair.s.resize(d);
    pair.y.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
      pair.s[i] = trial[i] - x[i];
      pair.y[i] = trial_grad[i] - grad[i];
    }
    double sy = dot(pair.s, pair.y);
    if (sy > 1e-12 * sup_norm(pair.s) * sup_norm(pair.y) && sy > 0.0) {
      pair.rho = 1.0 / sy;
      history.push_back(std::move(pair));
      if (static_cast<int>(history.size()) > config.memory) history.pop_front();
    }

    double improvement = f - f_new;
    x.swap(trial);
    grad.swap(trial_grad);
    f = f_new;
    report.iterations = iter + 1;
    report.likelihood_path.push_back(-f);
    if (improvement <= config.f_tol * std::max({std::abs(f), std::abs(f_new), 1.0})) {
      report.converged = true;
      break;
    }
  }

  report.likelihood = -f;
  report.grad_norm = projected_grad_norm(x, grad, bound);
  // The projection assigns the bound value exactly, so equality is reliable.
  for (std::size_t i = 0; i < d; ++i)
    if (std::abs(x[i]) == bound) report.active_bounds.push_back(static_cast<int>(i));
  best_x = std::move(x);
  return report;
}

}  // namespace

void OptimizerConfig::validate() const {
  if (memory < 1) throw_usage("optimizer memory must be >= 1");
  if (max_iters < 1) throw_usage("max_iters must be >= 1");
  if (grad_tol <= 0.0 || f_tol <= 0.0) throw_usage("tolerances must be positive");
  if (restarts < 0) throw_usage("restart count must be non-negative");
}

std::string ConvergenceReport::to_json() const {
  json obj;
  obj["best_start"] = best_start;
  obj["likelihood"] = likelihood;
  obj["iterations"] = iterations;
  obj["grad_norm"] = grad_norm;
  obj["active_bounds"] = active_bounds;
  json list = json::array();
  for (const StartReport& s : starts) {
    list.push_back({{"start", s.start_index},
                    {"iterations", s.iterations},
                    {"converged", s.converged},
                    {"likelihood", s.likelihood},
                    {"grad_norm", s.grad_norm},
                    {"active_bounds", s.active_bounds}});
  }
  obj["starts"] = list;
  return obj.dump(2);
}

std::pair<HcfModel, ConvergenceReport> maximize_likelihood(const SampleSet& samples,
                                                           const FeatureMatrix& features,
                                                           const HcfModel& init,
                                                           const OptimizerConfig& config) {
  config.validate();
  init.validate();
  if (features.dim() != init.dim())
    throw_usage("init model dimension does not match the features");

  LikelihoodProblem problem(features, samples, init.lambda);
  const std::size_t d = init.dim();
  const int n_starts = 1 + config.restarts;

  std::vector<std::vector<double>> start_points(n_starts);
  start_points[0] = init.theta;
  for (int s = 1; s < n_starts; ++s) {
    Rng rng = Rng::for_stream(config.rng_seed, static_cast<std::uint64_t>(s));
    start_points[s].resize(d);
    for (std::size_t i = 0; i < d; ++i)
      start_points[s][i] = rng.uniform(-init.bound, init.bound);
  }

  std::vector<StartReport> reports(n_starts);
  std::vector<std::vector<double>> finals(n_starts);
  parallel_for(static_cast<std::size_t>(n_starts), [&](std::size_t s) {
    reports[s] = minimize_from(problem, start_points[s], init.bound, config, finals[s]);
    reports[s].start_index = static_cast<int>(s);
  });

  int best = 0;
  for (int s = 1; s < n_starts; ++s)
    if (reports[s].likelihood > reports[best].likelihood) best = s;

  HcfModel out = init;
  out.theta = finals[best];
  ConvergenceReport report;
  report.starts = reports;
  report.best_start = best;
  report.likelihood = reports[best].likelihood;
  report.iterations = reports[best].iterations;
  report.grad_norm = reports[best].grad_norm;
  report.active_bounds = reports[best].active_bounds;
  return {std::move(out), std::move(report)};
}

}  // namespace hcf
