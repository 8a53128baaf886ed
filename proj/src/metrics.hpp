#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cascade.hpp"
#include "model.hpp"

namespace hcf {

enum class ErrorMode { absolute, relative };

ErrorMode error_mode_from_string(const std::string& name);

/// Per-line failure tallies over a trace set, normalized on demand to
/// expected failures per cascade.
struct FailureDistribution {
  std::map<LineId, std::uint64_t> counts;
  std::int64_t n_cascades = 0;

  double expected(LineId id) const {
    auto it = counts.find(id);
    double c = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    return n_cascades > 0 ? c / static_cast<double>(n_cascades) : 0.0;
  }
};

// Counts failures per line across the traces; generation 0 is skipped when
// `exclude_initial` is set. The universe fixes which lines participate (lines
// that never fail count as zero); when omitted it is the union of ids seen in
// the traces.
FailureDistribution failure_distribution(const std::vector<CascadeTrace>& traces,
                                         bool exclude_initial,
                                         const std::optional<std::vector<LineId>>& universe =
                                             std::nullopt);

// Mean per-line error between expected failure counts (model vs data).
// Relative mode divides by max(data value, 1). With `top_fraction` set, only
// the top ceil(fraction * n) lines by data-side count are evaluated (ties to
// the lower id).
double distribution_error(const FailureDistribution& model_dist,
                          const FailureDistribution& data_dist, ErrorMode mode,
                          std::optional<double> top_fraction = std::nullopt);

// Mean entrywise error over all ordered pairs of two probability matrices.
// Relative mode divides by max(reference value, lambda).
double probability_error(const ProbabilityMatrix& a, const ProbabilityMatrix& b,
                         ErrorMode mode, double lambda = 1e-9);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  double mass = 0.0;
};

// Probability mass of total cascade size per bin [lo, hi) (last bin closed).
// Sizes outside the binned range carry no mass.
std::vector<HistogramBin> size_histogram(const std::vector<CascadeTrace>& traces,
                                         const std::vector<double>& bin_edges);

double mean_cascade_size(const std::vector<CascadeTrace>& traces);

std::string histogram_to_csv(const std::vector<HistogramBin>& bins);

}  // namespace hcf
