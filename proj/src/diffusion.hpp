#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "cascade.hpp"
#include "model.hpp"

namespace hcf {

/// One independent-cascade rollout: generation 0 is the seed set, generation
/// t+1 the nodes activated by generation t. Generations partition the final
/// active set.
struct DiffusionRun {
  std::vector<LineId> seed_lines;
  std::vector<std::vector<LineId>> generations;
  std::uint64_t rng_seed = 0;
};

// Discrete-step IC on the diffusion graph: each node newly active at step t
// gets one chance to activate every inactive node v with probability p_uv.
// Deterministic given rng_seed (activation attempts are drawn in sorted node
// order).
DiffusionRun simulate_ic(const ProbabilityMatrix& pmat, const std::vector<LineId>& seeds,
                         std::uint64_t rng_seed);

// Repeated IC rollouts packaged as cascade traces (for the prediction and
// evaluation pipelines). Fixed seed set per run.
std::vector<CascadeTrace> simulate_many(const ProbabilityMatrix& pmat,
                                        const std::vector<LineId>& seeds,
                                        std::int64_t n_runs, std::uint64_t rng_seed);

// IC rollouts with Bernoulli(fail_prob) initial seeds per node, redrawn until
// non-empty; mirrors the cascade generator's contingency sampling.
std::vector<CascadeTrace> simulate_random(const ProbabilityMatrix& pmat, std::int64_t n_runs,
                                          double fail_prob, std::uint64_t rng_seed);

struct SpreadEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t runs = 0;
};

// Monte Carlo expected spread (mean final active-set size). Runs use
// counter-derived seeds, so the estimate is independent of scheduling order.
SpreadEstimate estimate_spread(const ProbabilityMatrix& pmat,
                               const std::vector<LineId>& seeds, std::int64_t n_runs,
                               std::uint64_t rng_seed);

// Exact expected spread by dynamic programming over (active, frontier)
// states, or live-edge enumeration when the positive-probability edge count
// is small. Only feasible for small instances (<= 20 nodes).
double exact_spread(const ProbabilityMatrix& pmat, const std::vector<LineId>& seeds);

struct RankedLine {
  LineId line = 0;
  double marginal_spread = 0.0;
};

// Spread evaluator signature used by CELF: maps a seed set to a spread value.
using SpreadEvaluator = std::function<double(const std::vector<LineId>&)>;

// Lazy-greedy (CELF) seed selection with stale-bound re-evaluation. Ties
// break toward the lower line id. With an exact evaluator this returns the
// plain greedy solution.
std::vector<RankedLine> celf_top_k(const ProbabilityMatrix& pmat, std::int64_t k,
                                   const SpreadEvaluator& evaluator);

// Monte Carlo CELF: common random numbers across candidates (every estimate
// reuses the same run seeds) to stabilize lazy comparisons.
std::vector<RankedLine> celf_top_k(const ProbabilityMatrix& pmat, std::int64_t k,
                                   std::int64_t n_runs, std::uint64_t rng_seed);

std::string ranking_to_csv(const std::vector<RankedLine>& ranking);

}  // namespace hcf
