#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dcflow.hpp"
#include "grid.hpp"

namespace hcf {

/// One cascade event as ordered generations of failed line ids. Generation 0
/// holds the initial outages; generations are pairwise disjoint and no
/// intermediate generation is empty.
struct CascadeTrace {
  std::int64_t cascade_id = 0;
  std::vector<std::vector<LineId>> generations;  // each sorted ascending

  std::size_t total_failures() const {
    std::size_t n = 0;
    for (const auto& g : generations) n += g.size();
    return n;
  }
};

// Deterministic overload cascade: starting from the initial outages, resolve
// the DC flow, trip every line loaded beyond alpha * capacity simultaneously,
// and repeat until no line is overloaded.
CascadeTrace run_cascade(const GridCase& grid, const std::vector<LineId>& initial_outages,
                         double alpha = 1.0);

// Monte Carlo dataset: per run, each in-service line fails independently with
// `line_fail_prob` (the draw is repeated until non-empty), then the cascade is
// rolled out. Runs use counter-derived RNG streams, so the output is
// deterministic in `rng_seed` and independent of scheduling.
std::vector<CascadeTrace> generate_dataset(const GridCase& grid, std::int64_t n_runs,
                                           double line_fail_prob, double alpha,
                                           std::uint64_t rng_seed);

// JSON Lines persistence: {"id": int, "generations": [[line_id,...],...]}.
std::string traces_to_jsonl(const std::vector<CascadeTrace>& traces);
std::vector<CascadeTrace> traces_from_jsonl(const std::string& text);
void save_traces(const std::vector<CascadeTrace>& traces, const std::string& path);
std::vector<CascadeTrace> load_traces(const std::string& path);

}  // namespace hcf
