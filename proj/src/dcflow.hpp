#pragma once

#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "grid.hpp"

namespace hcf {

/// Solved DC operating point. Injections are the post-rebalancing values the
/// angles were solved against, so conservation holds against them exactly.
struct FlowState {
  std::unordered_map<BusId, double> bus_angles;      // radians, reference = 0
  std::unordered_map<BusId, double> bus_injections;  // rebalanced, power units
  std::unordered_map<LineId, double> line_flows;     // 0 for out-of-service lines
  std::vector<std::vector<BusId>> islands;           // connected components, each sorted
  std::vector<bool> island_blackout;                 // per island: solve failed, load shed

  double flow(LineId id) const {
    auto it = line_flows.find(id);
    return it == line_flows.end() ? 0.0 : it->second;
  }
};

// Solves B*theta = P per island of the grid with `outages` removed on top of
// the lines already out of service. Islands with a generation/demand
// imbalance are rebalanced first by scaling the surplus side pro rata
// (generation scaled down, or demand shed). Reference bus per island is the
// lowest bus id. Line flow = susceptance * (angle_from - angle_to).
FlowState solve_dc_flow(const GridCase& grid,
                        const std::unordered_set<LineId>& outages = {});

}  // namespace hcf
