#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcflow.hpp"
#include "grid.hpp"

namespace hcf {

/// Names plus the min-max normalization fitted on a training grid. Applying
/// the spec maps every raw feature into [-1, 1]; out-of-range values seen on
/// other grid instances are clamped, which is what makes a trained model
/// applicable to unseen instances.
struct FeatureSpec {
  std::vector<std::string> names;  // size d
  std::vector<double> lo;          // raw minima, size d
  std::vector<double> hi;          // raw maxima, size d

  std::size_t dim() const { return names.size(); }

  // Identity spec for externally supplied features already in [-1, 1].
  static FeatureSpec identity(std::size_t d, const std::string& prefix = "f");
};

/// Normalized feature vectors for every ordered pair of in-service lines
/// (the diffusion graph is conceptually complete).
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::vector<LineId> nodes, FeatureSpec spec);

  const std::vector<LineId>& nodes() const { return nodes_; }
  const FeatureSpec& spec() const { return spec_; }
  std::size_t dim() const { return spec_.dim(); }
  std::size_t node_count() const { return nodes_.size(); }

  int node_index(LineId id) const;  // -1 if unknown

  std::span<const double> at(LineId u, LineId v) const;
  std::span<double> at_mut(LineId u, LineId v);
  std::span<const double> at_index(int ui, int vi) const;

  std::string to_csv() const;
  static FeatureMatrix from_csv(const std::string& csv, FeatureSpec spec);

 private:
  std::vector<LineId> nodes_;  // sorted
  FeatureSpec spec_;
  std::vector<double> values_;  // (ui * n + vi) * d, diagonal unused
};

/// Raw physical/topological quantities for one in-service line.
struct LineFeatures {
  LineId id = 0;
  std::vector<double> values;  // aligned with line_feature_names()
};

const std::vector<std::string>& line_feature_names();  // 11 per-line features
const std::vector<std::string>& pair_feature_names();  // 3 pairwise features

// Per-line feature table from the intact-grid ("base") power flow: electrical
// quantities, loading, and bus-graph topology (degree, exact edge
// betweenness via all-pairs BFS, island share). Exact betweenness is
// quadratic in bus count; fine up to a few thousand buses.
std::vector<LineFeatures> extract_line_features(const GridCase& grid,
                                                const FlowState& base_flow);

// Assembles x_uv = [features(u), features(v), pairwise(u,v)] for all ordered
// pairs and normalizes onto [-1, 1]. With no spec given, fits min-max bounds
// and returns them; with a spec given, applies it and clamps.
FeatureMatrix build_pair_features(const GridCase& grid,
                                  const std::vector<LineFeatures>& table,
                                  const std::optional<FeatureSpec>& spec = std::nullopt);

// Convenience: base flow + line table + pair assembly in one call.
FeatureMatrix extract_features(const GridCase& grid,
                               const std::optional<FeatureSpec>& spec = std::nullopt);

std::string feature_spec_to_json(const FeatureSpec& spec);
FeatureSpec feature_spec_from_json(const std::string& text);

}  // namespace hcf
