#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "model.hpp"

namespace hcf {

struct OptimizerConfig {
  int memory = 10;          // L-BFGS history pairs
  int max_iters = 500;
  double grad_tol = 1e-6;   // projected-gradient sup norm
  double f_tol = 1e-10;     // relative improvement floor
  int restarts = 3;         // extra random starts beyond the given init
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct StartReport {
  int start_index = 0;
  int iterations = 0;
  bool converged = false;       // grad_tol or f_tol reached within max_iters
  double likelihood = 0.0;      // final mean log-likelihood
  double grad_norm = 0.0;       // projected-gradient sup norm at the end
  std::vector<int> active_bounds;       // coordinates pinned at -B or +B
  std::vector<double> likelihood_path;  // value after every accepted step
};

struct ConvergenceReport {
  std::vector<StartReport> starts;
  int best_start = 0;
  double likelihood = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
  std::vector<int> active_bounds;

  std::string to_json() const;
};

// Maximizes the expected log-likelihood over the box [-B, B]^d with
// projected limited-memory BFGS and a backtracking (sufficient-decrease)
// line search. Runs 1 + restarts starts: start 0 from `init.theta`, the rest
// uniform in the box from rng_seed; starts execute in parallel and the best
// final likelihood wins (ties to the lowest start index). Returns the
// trained model plus the per-start convergence report.
std::pair<HcfModel, ConvergenceReport> maximize_likelihood(const SampleSet& samples,
                                                           const FeatureMatrix& features,
                                                           const HcfModel& init,
                                                           const OptimizerConfig& config);

}  // namespace hcf
