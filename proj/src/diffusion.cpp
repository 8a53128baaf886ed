#include "diffusion.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "parallel.hpp"
#include "rng.hpp"

namespace hcf {

namespace {

std::vector<int> seed_indices(const ProbabilityMatrix& pmat,
                              const std::vector<LineId>& seeds) {
  if (seeds.empty()) throw_usage("seed set must be non-empty");
  std::vector<int> out;
  out.reserve(seeds.size());
  for (LineId id : seeds) {
    int idx = pmat.node_index(id);
    if (idx < 0) throw_data("unknown node id " + std::to_string(id));
    out.push_back(idx);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Core IC rollout over node indices; returns generations of indices.
std::vector<std::vector<int>> roll_ic(const ProbabilityMatrix& pmat,
                                      const std::vector<int>& seeds, Rng& rng) {
  const int n = static_cast<int>(pmat.node_count());
  std::vector<char> active(n, 0);
  for (int s : seeds) active[s] = 1;
  std::vector<std::vector<int>> generations{seeds};
  while (!generations.back().empty()) {
    std::vector<int> next;
    for (int u : generations.back()) {
      for (int v = 0; v < n; ++v) {
        if (active[v]) continue;
        double p = pmat.at_index(u, v);
        if (p > 0.0 && rng.uniform() < p) {
          active[v] = 1;
          next.push_back(v);
        }
      }
    }
    std::sort(next.begin(), next.end());
    generations.push_back(std::move(next));
  }
  generations.pop_back();  // drop the terminating empty wave
  return generations;
}

std::size_t rollout_size(const ProbabilityMatrix& pmat, const std::vector<int>& seeds,
                         Rng& rng) {
  std::size_t total = 0;
  for (const auto& gen : roll_ic(pmat, seeds, rng)) total += gen.size();
  return total;
}

}  // namespace

DiffusionRun simulate_ic(const ProbabilityMatrix& pmat, const std::vector<LineId>& seeds,
                         std::uint64_t rng_seed) {
  auto idx = seed_indices(pmat, seeds);
  Rng rng(rng_seed);
  DiffusionRun run;
  run.rng_seed = rng_seed;
  for (int s : idx) run.seed_lines.push_back(pmat.nodes()[s]);
  for (const auto& gen : roll_ic(pmat, idx, rng)) {
    std::vector<LineId> ids;
    ids.reserve(gen.size());
    for (int v : gen) ids.push_back(pmat.nodes()[v]);
    run.generations.push_back(std::move(ids));
  }
  return run;
}

std::vector<CascadeTrace> simulate_many(const ProbabilityMatrix& pmat,
                                        const std::vector<LineId>& seeds,
                                        std::int64_t n_runs, std::uint64_t rng_seed) {
  if (n_runs < 0) throw_usage("run count must be non-negative");
  auto idx = seed_indices(pmat, seeds);
  std::vector<CascadeTrace> traces(static_cast<std::size_t>(n_runs));
  parallel_for(static_cast<std::size_t>(n_runs), [&](std::size_t r) {
    Rng rng = Rng::for_stream(rng_seed, r);
    CascadeTrace& t = traces[r];
    t.cascade_id = static_cast<std::int64_t>(r);
    for (const auto& gen : roll_ic(pmat, idx, rng)) {
      std::vector<LineId> ids;
      ids.reserve(gen.size());
      for (int v : gen) ids.push_back(pmat.nodes()[v]);
      t.generations.push_back(std::move(ids));
    }
  });
  return traces;
}

std::vector<CascadeTrace> simulate_random(const ProbabilityMatrix& pmat, std::int64_t n_runs,
                                          double fail_prob, std::uint64_t rng_seed) {
  if (n_runs < 0) throw_usage("run count must be non-negative");
  if (fail_prob <= 0.0 || fail_prob >= 1.0)
    throw_usage("failure probability must lie in (0, 1)");
  const int n = static_cast<int>(pmat.node_count());
  std::vector<CascadeTrace> traces(static_cast<std::size_t>(n_runs));
  parallel_for(static_cast<std::size_t>(n_runs), [&](std::size_t r) {
    Rng rng = Rng::for_stream(rng_seed, r);
    std::vector<int> seeds;
    while (seeds.empty()) {
      for (int v = 0; v < n; ++v)
        if (rng.bernoulli(fail_prob)) seeds.push_back(v);
    }
    CascadeTrace& t = traces[r];
    t.cascade_id = static_cast<std::int64_t>(r);
    for (const auto& gen : roll_ic(pmat, seeds, rng)) {
      std::vector<LineId> ids;
      ids.reserve(gen.size());
      for (int v : gen) ids.push_back(pmat.nodes()[v]);
      t.generations.push_back(std::move(ids));
    }
  });
  return traces;
}

SpreadEstimate estimate_spread(const ProbabilityMatrix& pmat,
                               const std::vector<LineId>& seeds, std::int64_t n_runs,
                               std::uint64_t rng_seed) {
  if (n_runs < 1) throw_usage("spread estimation needs at least one run");
  auto idx = seed_indices(pmat, seeds);
  struct Acc {
    double sum = 0.0;
    double sum_sq = 0.0;
  };
  Acc total = parallel_reduce<Acc>(
      static_cast<std::size_t>(n_runs), 256, Acc{},
      [&](std::size_t lo, std::size_t hi) {
        Acc acc;
        for (std::size_t r = lo; r < hi; ++r) {
          Rng rng = Rng::for_stream(rng_seed, r);
          auto size = static_cast<double>(rollout_size(pmat, idx, rng));
          acc.sum += size;
          acc.sum_sq += size * size;
        }
        return acc;
      },
      [](Acc a, Acc b) {
        a.sum += b.sum;
        a.sum_sq += b.sum_sq;
        return a;
      });
  SpreadEstimate est;
  est.runs = n_runs;
  const double n = static_cast<double>(n_runs);
  est.mean = total.sum / n;
  double variance = std::max(0.0, total.sum_sq / n - est.mean * est.mean);
  est.std_error = n > 1 ? std::sqrt(variance / (n - 1)) : 0.0;
  return est;
}

namespace {

// Frontier dynamic program: state = (active set, newly active set); each
// inactive node activates independently with 1 - prod over the frontier of
// (1 - p). Exponential in node count; callers cap the instance size.
class SpreadDp {
 public:
  SpreadDp(const ProbabilityMatrix& pmat) : pmat_(pmat), n_(static_cast<int>(pmat.node_count())) {}

  double run(std::uint32_t seed_mask) { return expected(seed_mask, seed_mask); }

 private:
  double expected(std::uint32_t active, std::uint32_t frontier) {
    if (frontier == 0) return static_cast<double>(std::popcount(active));
    std::uint64_t key = (static_cast<std::uint64_t>(active) << 32) | frontier;
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    // Activation probability per inactive node given this frontier.
    std::vector<int> inactive;
    std::vector<double> act_p;
    for (int v = 0; v < n_; ++v) {
      if (active & (1u << v)) continue;
      double miss = 1.0;
      for (int u = 0; u < n_; ++u)
        if (frontier & (1u << u)) miss *= 1.0 - pmat_.at_index(u, v);
      inactive.push_back(v);
      act_p.push_back(1.0 - miss);
    }
    double result = 0.0;
    const std::uint32_t subsets = 1u << inactive.size();
    for (std::uint32_t pick = 0; pick < subsets; ++pick) {
      double prob = 1.0;
      std::uint32_t next = 0;
      for (std::size_t i = 0; i < inactive.size(); ++i) {
        if (pick & (1u << i)) {
          prob *= act_p[i];
          next |= 1u << inactive[i];
        } else {
          prob *= 1.0 - act_p[i];
        }
      }
      if (prob > 0.0) result += prob * expected(active | next, next);
    }
    memo_.emplace(key, result);
    return result;
  }

  const ProbabilityMatrix& pmat_;
  int n_;
  std::unordered_map<std::uint64_t, double> memo_;
};

}  // namespace

double exact_spread(const ProbabilityMatrix& pmat, const std::vector<LineId>& seeds) {
  const int n = static_cast<int>(pmat.node_count());
  if (n > 20) throw_usage("exact spread is limited to 20 nodes");
  auto idx = seed_indices(pmat, seeds);
  std::uint32_t mask = 0;
  for (int s : idx) mask |= 1u << s;
  SpreadDp dp(pmat);
  return dp.run(mask);
}

std::vector<RankedLine> celf_top_k(const ProbabilityMatrix& pmat, std::int64_t k,
                                   const SpreadEvaluator& evaluator) {
  if (k < 1) throw_usage("k must be >= 1");
  if (k > static_cast<std::int64_t>(pmat.node_count()))
    throw_usage("k exceeds line count");

  struct Candidate {
    double gain;
    LineId line;
    int evaluated_at;  // selection round of the last evaluation
  };
  auto worse = [](const Candidate& a, const Candidate& b) {
    if (a.gain != b.gain) return a.gain < b.gain;
    return a.line > b.line;  // ties to the lower id
  };
  std::priority_queue<Candidate, std::vector<Candidate>, decltype(worse)> queue(worse);

  std::vector<LineId> selected;
  double base_spread = 0.0;
  for (LineId id : pmat.nodes())
    queue.push({evaluator(std::vector<LineId>{id}), id, 0});

  std::vector<RankedLine> out;
  while (static_cast<std::int64_t>(out.size()) < k) {
    Candidate top = queue.top();
    queue.pop();
    if (top.evaluated_at == static_cast<int>(out.size())) {
      selected.push_back(top.line);
      out.push_back({top.line, top.gain});
      base_spread += top.gain;
    } else {
      // Stale bound: re-evaluate the marginal against the current seed set.
      std::vector<LineId> with = selected;
      with.push_back(top.line);
      top.gain = evaluator(with) - base_spread;
      top.evaluated_at = static_cast<int>(out.size());
      queue.push(top);
    }
  }
  return out;
}

std::vector<RankedLine> celf_top_k(const ProbabilityMatrix& pmat, std::int64_t k,
                                   std::int64_t n_runs, std::uint64_t rng_seed) {
  if (n_runs < 1) throw_usage("CELF needs at least one Monte Carlo run");
  // Same rng_seed for every candidate: common random numbers across the
  // lazy-greedy comparisons.
  SpreadEvaluator evaluator = [&pmat, n_runs, rng_seed](const std::vector<LineId>& seeds) {
    return estimate_spread(pmat, seeds, n_runs, rng_seed).mean;
  };
  return celf_top_k(pmat, k, evaluator);
}

std::string ranking_to_csv(const std::vector<RankedLine>& ranking) {
  std::ostringstream out;
  out << "rank,line_id,marginal_spread\n";
  char buf[40];
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", ranking[i].marginal_spread);
    out << (i + 1) << ',' << ranking[i].line << ',' << buf << '\n';
  }
  return out.str();
}

}  // namespace hcf
