#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cascade.hpp"

namespace hcf {

/// One aggregated diffusion sample: an activator set, a target line, a label
/// (did the target fail in the next generation) and how many times this exact
/// key occurred across the dataset.
struct Sample {
  std::vector<LineId> activators;  // sorted, non-empty
  LineId target = 0;               // never inside activators
  bool positive = false;
  std::uint64_t multiplicity = 1;
};

struct SampleSet {
  std::vector<Sample> samples;      // canonical order: (activators, target, label)
  std::uint64_t total = 0;          // sum of multiplicities, |S|
  std::size_t max_activators = 0;   // V, the largest activator-set size

  std::uint64_t positive_total() const;
  std::string to_csv() const;  // activators joined by '|', target, label, multiplicity
};

// Turns generation-structured traces into aggregated positive/negative
// samples over the given line universe. For each step t: every line of
// generation t+1 yields a positive sample against activators V_t; every line
// not failed by generation t+1 yields a negative one. Identical
// (activators, target, label) keys are merged with summed multiplicity.
SampleSet encode_cascades(const std::vector<CascadeTrace>& traces,
                          const std::vector<LineId>& universe);

struct CoveringProbability {
  double exact = 0.0;        // (1 - (1 - 1/V)^S)^V
  double lower_bound = 0.0;  // 1 - V * exp(-S/V)
};

// Probability that `n_samples` uniform draws over `n_lines` touch every line
// at least once.
CoveringProbability covering_probability(std::int64_t n_lines, std::int64_t n_samples);

}  // namespace hcf
