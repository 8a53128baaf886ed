#include "metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace hcf {

ErrorMode error_mode_from_string(const std::string& name) {
  if (name == "absolute" || name == "abs") return ErrorMode::absolute;
  if (name == "relative" || name == "rel") return ErrorMode::relative;
  throw_usage("unknown error mode '" + name + "' (expected absolute or relative)");
}

FailureDistribution failure_distribution(
    const std::vector<CascadeTrace>& traces, bool exclude_initial,
    const std::optional<std::vector<LineId>>& universe) {
  if (traces.empty()) throw_usage("failure distribution needs at least one trace");
  FailureDistribution dist;
  dist.n_cascades = static_cast<std::int64_t>(traces.size());
  if (universe) {
    for (LineId id : *universe) dist.counts[id] = 0;
  } else {
    for (const CascadeTrace& t : traces)
      for (const auto& gen : t.generations)
        for (LineId id : gen) dist.counts[id] = 0;
  }
  for (const CascadeTrace& t : traces) {
    for (std::size_t g = exclude_initial ? 1 : 0; g < t.generations.size(); ++g)
      for (LineId id : t.generations[g]) {
        auto it = dist.counts.find(id);
        if (it == dist.counts.end())
          throw_data("trace line " + std::to_string(id) + " outside the universe");
        ++it->second;
      }
  }
  return dist;
}

double distribution_error(const FailureDistribution& model_dist,
                          const FailureDistribution& data_dist, ErrorMode mode,
                          std::optional<double> top_fraction) {
  if (model_dist.counts.size() != data_dist.counts.size())
    throw_usage("distribution universes differ");
  for (const auto& [id, unused] : data_dist.counts)
    if (!model_dist.counts.count(id)) throw_usage("distribution universes differ");

  std::vector<LineId> lines;
  lines.reserve(data_dist.counts.size());
  for (const auto& [id, unused] : data_dist.counts) lines.push_back(id);

  if (top_fraction) {
    if (*top_fraction <= 0.0 || *top_fraction > 1.0)
      throw_usage("top fraction must lie in (0, 1]");
    std::size_t keep = static_cast<std::size_t>(
        std::ceil(*top_fraction * static_cast<double>(lines.size())));
    keep = std::max<std::size_t>(1, std::min(keep, lines.size()));
    std::sort(lines.begin(), lines.end(), [&](LineId a, LineId b) {
      double ca = data_dist.expected(a), cb = data_dist.expected(b);
      if (ca != cb) return ca > cb;
      return a < b;
    });
    lines.resize(keep);
  }

  double acc = 0.0;
  for (LineId id : lines) {
    double m = model_dist.expected(id);
    double d = data_dist.expected(id);
    double err = std::abs(m - d);
    if (mode == ErrorMode::relative) err /= std::max(d, 1.0);
    acc += err;
  }
  return acc / static_cast<double>(lines.size());
}

double probability_error(const ProbabilityMatrix& a, const ProbabilityMatrix& b,
                         ErrorMode mode, double lambda) {
  if (a.nodes() != b.nodes()) throw_usage("probability matrices cover different nodes");
  const int n = static_cast<int>(a.node_count());
  if (n < 2) throw_usage("probability error needs at least two nodes");
  double acc = 0.0;
  for (int ui = 0; ui < n; ++ui)
    for (int vi = 0; vi < n; ++vi) {
      if (ui == vi) continue;
      double err = std::abs(a.at_index(ui, vi) - b.at_index(ui, vi));
      if (mode == ErrorMode::relative) err /= std::max(b.at_index(ui, vi), lambda);
      acc += err;
    }
  return acc / static_cast<double>(static_cast<std::int64_t>(n) * (n - 1));
}

std::vector<HistogramBin> size_histogram(const std::vector<CascadeTrace>& traces,
                                         const std::vector<double>& bin_edges) {
  if (bin_edges.size() < 2) throw_usage("histogram needs at least two bin edges");
  for (std::size_t i = 1; i < bin_edges.size(); ++i)
    if (bin_edges[i] <= bin_edges[i - 1])
      throw_usage("bin edges must be strictly increasing");
  if (traces.empty()) throw_usage("histogram needs at least one trace");

  std::vector<HistogramBin> bins(bin_edges.size() - 1);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    bins[i].lo = bin_edges[i];
    bins[i].hi = bin_edges[i + 1];
  }
  const double weight = 1.0 / static_cast<double>(traces.size());
  for (const CascadeTrace& t : traces) {
    const double size = static_cast<double>(t.total_failures());
    for (std::size_t i = 0; i < bins.size(); ++i) {
      const bool last = i + 1 == bins.size();
      if (size >= bins[i].lo && (size < bins[i].hi || (last && size == bins[i].hi))) {
        bins[i].mass += weight;
        break;
      }
    }
  }
  return bins;
}

double mean_cascade_size(const std::vector<CascadeTrace>& traces) {
  if (traces.empty()) throw_usage("mean cascade size needs at least one trace");
  double acc = 0.0;
  for (const CascadeTrace& t : traces) acc += static_cast<double>(t.total_failures());
  return acc / static_cast<double>(traces.size());
}

std::string histogram_to_csv(const std::vector<HistogramBin>& bins) {
  std::ostringstream out;
  out << "bin_lo,bin_hi,mass\n";
  char buf[96];
  for (const HistogramBin& b : bins) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g", b.lo, b.hi, b.mass);
    out << buf << '\n';
  }
  return out.str();
}

}  // namespace hcf
