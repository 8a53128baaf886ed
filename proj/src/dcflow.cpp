#include "dcflow.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>

namespace hcf {

namespace {

struct IslandProblem {
  std::vector<BusId> buses;              // sorted
  std::vector<const Line*> lines;        // in-service lines inside the island
  std::unordered_map<BusId, int> index;  // bus id -> local index
};

// Connected components over in-service, non-outaged lines. Isolated buses
// form their own islands.
std::vector<IslandProblem> split_islands(const GridCase& grid,
                                         const std::unordered_set<LineId>& outages) {
  std::unordered_map<BusId, std::vector<const Line*>> adjacency;
  std::vector<const Line*> active;
  for (const Line& l : grid.lines) {
    if (!l.in_service || outages.count(l.id)) continue;
    active.push_back(&l);
    adjacency[l.from].push_back(&l);
    adjacency[l.to].push_back(&l);
  }
  std::unordered_map<BusId, int> component;
  std::vector<IslandProblem> islands;
  for (const Bus& b : grid.buses) {
    if (component.count(b.id)) continue;
    int id = static_cast<int>(islands.size());
    islands.emplace_back();
    std::vector<BusId> stack{b.id};
    component[b.id] = id;
    while (!stack.empty()) {
      BusId cur = stack.back();
      stack.pop_back();
      islands[id].buses.push_back(cur);
      auto it = adjacency.find(cur);
      if (it == adjacency.end()) continue;
      for (const Line* l : it->second) {
        BusId other = l->from == cur ? l->to : l->from;
        if (!component.count(other)) {
          component[other] = id;
          stack.push_back(other);
        }
      }
    }
    std::sort(islands[id].buses.begin(), islands[id].buses.end());
  }
  for (auto& island : islands)
    for (std::size_t i = 0; i < island.buses.size(); ++i)
      island.index[island.buses[i]] = static_cast<int>(i);
  for (const Line* l : active) {
    int c = component[l->from];
    islands[c].lines.push_back(l);
  }
  return islands;
}

}  // namespace

FlowState solve_dc_flow(const GridCase& grid, const std::unordered_set<LineId>& outages) {
  FlowState state;
  for (const Line& l : grid.lines) state.line_flows[l.id] = 0.0;

  auto islands = split_islands(grid, outages);
  for (auto& island : islands) {
    const int n = static_cast<int>(island.buses.size());

    // Rebalance the island: scale the surplus side pro rata.
    double gen = 0.0, dem = 0.0;
    for (BusId b : island.buses) {
      const Bus* bus = grid.find_bus(b);
      gen += bus->generation;
      dem += bus->demand;
    }
    double gen_scale = 1.0, dem_scale = 1.0;
    if (gen > dem) {
      gen_scale = gen > 0.0 ? dem / gen : 0.0;
    } else if (dem > gen) {
      dem_scale = dem > 0.0 ? gen / dem : 0.0;
    }
    Eigen::VectorXd injection(n);
    for (int i = 0; i < n; ++i) {
      const Bus* bus = grid.find_bus(island.buses[i]);
      injection[i] = bus->generation * gen_scale - bus->demand * dem_scale;
      state.bus_injections[bus->id] = injection[i];
    }

    state.islands.push_back(island.buses);
    if (n == 1 || island.lines.empty()) {
      state.bus_angles[island.buses.front()] = 0.0;
      state.island_blackout.push_back(false);
      continue;
    }

    // Reduced weighted Laplacian: drop the reference row/column (local index 0,
    // i.e. the lowest bus id) and solve for the remaining angles.
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(island.lines.size() * 4);
    for (const Line* l : island.lines) {
      int i = island.index[l->from] - 1;
      int j = island.index[l->to] - 1;
      if (i >= 0) triplets.emplace_back(i, i, l->susceptance);
      if (j >= 0) triplets.emplace_back(j, j, l->susceptance);
      if (i >= 0 && j >= 0) {
        triplets.emplace_back(i, j, -l->susceptance);
        triplets.emplace_back(j, i, -l->susceptance);
      }
    }
    Eigen::SparseMatrix<double> laplacian(n - 1, n - 1);
    laplacian.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(laplacian);
    bool blackout = solver.info() != Eigen::Success;
    Eigen::VectorXd angles = Eigen::VectorXd::Zero(n);
    if (!blackout) {
      Eigen::VectorXd reduced = solver.solve(injection.tail(n - 1));
      blackout = solver.info() != Eigen::Success || !reduced.allFinite();
      if (!blackout) angles.tail(n - 1) = reduced;
    }
    state.island_blackout.push_back(blackout);
    if (blackout) {
      // Singular island system: report it dead, shed its demand entirely.
      for (BusId b : island.buses) {
        state.bus_angles[b] = 0.0;
        state.bus_injections[b] = 0.0;
      }
      continue;
    }
    for (int i = 0; i < n; ++i) state.bus_angles[island.buses[i]] = angles[i];
    for (const Line* l : island.lines) {
      state.line_flows[l->id] =
          l->susceptance * (angles[island.index[l->from]] - angles[island.index[l->to]]);
    }
  }
  return state;
}

}  // namespace hcf
