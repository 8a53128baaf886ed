#pragma once

// Shared test utilities: fixture loading, independent oracles (dense DC
// solve, brute-force activation probability, finite differences, naive
// greedy) and random instance generators. Oracles are written from scratch
// against the definitions, not by calling the code under test.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cascade.hpp"
#include "dcflow.hpp"
#include "features.hpp"
#include "grid.hpp"
#include "model.hpp"
#include "rng.hpp"

#ifndef HCF_TEST_DATA_DIR
#define HCF_TEST_DATA_DIR "tests/data"
#endif

namespace testutil {

inline std::string fixture_path(const std::string& name) {
  return std::string(HCF_TEST_DATA_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing test file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline hcf::GridCase load_fixture(const std::string& name) {
  return hcf::load_grid_case(fixture_path(name));
}

// ---- independent DC flow oracle -------------------------------------------
//
// Re-derives islands with union-find, rebalances by proportional scaling,
// then solves the full (singular) Laplacian system with a dense
// pseudo-inverse. No reference bus: flows are gauge-invariant, so they are
// directly comparable with the solver under test.

struct OracleFlow {
  std::map<hcf::LineId, double> flows;
  std::map<hcf::BusId, double> injections;
};

inline OracleFlow oracle_dc_flow(const hcf::GridCase& grid,
                                 const std::set<hcf::LineId>& outages = {}) {
  const std::size_t n = grid.buses.size();
  std::map<hcf::BusId, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[grid.buses[i].id] = i;

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<const hcf::Line*> active;
  for (const hcf::Line& l : grid.lines) {
    if (!l.in_service || outages.count(l.id)) continue;
    active.push_back(&l);
    parent[find(index[l.from])] = find(index[l.to]);
  }

  // Rebalance each component pro rata.
  std::map<std::size_t, double> comp_gen, comp_dem;
  for (std::size_t i = 0; i < n; ++i) {
    comp_gen[find(i)] += grid.buses[i].generation;
    comp_dem[find(i)] += grid.buses[i].demand;
  }
  OracleFlow out;
  Eigen::VectorXd injection(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t root = find(i);
    double gen_scale = 1.0, dem_scale = 1.0;
    if (comp_gen[root] > comp_dem[root])
      gen_scale = comp_gen[root] > 0 ? comp_dem[root] / comp_gen[root] : 0.0;
    else if (comp_dem[root] > comp_gen[root])
      dem_scale = comp_dem[root] > 0 ? comp_gen[root] / comp_dem[root] : 0.0;
    injection[static_cast<Eigen::Index>(i)] =
        grid.buses[i].generation * gen_scale - grid.buses[i].demand * dem_scale;
    out.injections[grid.buses[i].id] = injection[static_cast<Eigen::Index>(i)];
  }

  Eigen::MatrixXd laplacian = Eigen::MatrixXd::Zero(n, n);
  for (const hcf::Line* l : active) {
    auto i = static_cast<Eigen::Index>(index[l->from]);
    auto j = static_cast<Eigen::Index>(index[l->to]);
    laplacian(i, i) += l->susceptance;
    laplacian(j, j) += l->susceptance;
    laplacian(i, j) -= l->susceptance;
    laplacian(j, i) -= l->susceptance;
  }
  // Minimum-norm solution of the singular system; flows do not depend on the
  // gauge choice.
  Eigen::VectorXd angles =
      laplacian.completeOrthogonalDecomposition().solve(injection);
  for (const hcf::Line& l : grid.lines) out.flows[l.id] = 0.0;
  for (const hcf::Line* l : active) {
    out.flows[l->id] =
        l->susceptance * (angles[static_cast<Eigen::Index>(index[l->from])] -
                          angles[static_cast<Eigen::Index>(index[l->to])]);
  }
  return out;
}

// ---- random grid generator -------------------------------------------------

// Connected random grid: spanning tree plus extra chords, balanced
// generation/demand, uniform susceptances and capacities.
inline hcf::GridCase random_grid(hcf::Rng& rng, int max_buses = 20) {
  const int n = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_buses - 1)));
  hcf::GridCase grid;
  for (int i = 1; i <= n; ++i) grid.buses.push_back({i, 0.0, 0.0});

  hcf::LineId next_line = 1;
  auto add_line = [&](hcf::BusId a, hcf::BusId b) {
    hcf::Line l;
    l.id = next_line++;
    l.from = a;
    l.to = b;
    l.susceptance = rng.uniform(0.5, 3.0);
    l.capacity = rng.uniform(0.5, 4.0);
    grid.lines.push_back(l);
  };
  for (int i = 2; i <= n; ++i)
    add_line(1 + static_cast<hcf::BusId>(rng.below(static_cast<std::uint64_t>(i - 1))), i);
  const int extra = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
  for (int e = 0; e < extra; ++e) {
    auto a = 1 + static_cast<hcf::BusId>(rng.below(static_cast<std::uint64_t>(n)));
    auto b = 1 + static_cast<hcf::BusId>(rng.below(static_cast<std::uint64_t>(n)));
    if (a != b) add_line(a, b);
  }

  double total = 0.0;
  for (auto& bus : grid.buses) {
    if (rng.bernoulli(0.4)) {
      bus.generation = rng.uniform(0.1, 2.0);
      total += bus.generation;
    }
  }
  if (total == 0.0) {
    grid.buses.front().generation = total = 1.0;
  }
  std::vector<double> weights;
  double wsum = 0.0;
  for (std::size_t i = 0; i < grid.buses.size(); ++i) {
    double w = rng.uniform(0.0, 1.0);
    weights.push_back(w);
    wsum += w;
  }
  for (std::size_t i = 0; i < grid.buses.size(); ++i)
    grid.buses[i].demand = total * weights[i] / wsum;
  return grid;
}

// ---- IC / likelihood oracles -----------------------------------------------

// P(at least one success) by enumerating all 2^k Bernoulli outcomes.
inline double brute_force_activation(const std::vector<double>& ps) {
  const std::size_t k = ps.size();
  double total = 0.0;
  for (std::uint64_t mask = 1; mask < (1ULL << k); ++mask) {
    double prob = 1.0;
    for (std::size_t i = 0; i < k; ++i)
      prob *= (mask & (1ULL << i)) ? ps[i] : 1.0 - ps[i];
    total += prob;
  }
  return total;
}

// Central finite differences of a scalar function.
template <class Fn>
std::vector<double> finite_diff_gradient(Fn&& fn, std::vector<double> theta,
                                         double h = 1e-6) {
  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = theta[i];
    theta[i] = orig + h;
    const double hi = fn(theta);
    theta[i] = orig - h;
    const double lo = fn(theta);
    theta[i] = orig;
    grad[i] = (hi - lo) / (2.0 * h);
  }
  return grad;
}

template <class Fn>
Eigen::MatrixXd finite_diff_hessian(Fn&& fn, std::vector<double> theta, double h = 1e-4) {
  const std::size_t d = theta.size();
  Eigen::MatrixXd hess(d, d);
  auto eval = [&](std::size_t i, std::size_t j, double hi, double hj) {
    std::vector<double> point = theta;
    point[i] += hi;
    point[j] += hj;
    return fn(point);
  };
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double value = (eval(i, j, h, h) - eval(i, j, h, -h) - eval(i, j, -h, h) +
                      eval(i, j, -h, -h)) /
                     (4.0 * h * h);
      hess(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
      hess(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = value;
    }
  return hess;
}

// Identity-normalized feature matrix over ids with random entries in [-1, 1].
inline hcf::FeatureMatrix random_features(const std::vector<hcf::LineId>& ids,
                                          std::size_t d, hcf::Rng& rng) {
  hcf::FeatureMatrix m(ids, hcf::FeatureSpec::identity(d));
  for (hcf::LineId u : ids)
    for (hcf::LineId v : ids) {
      if (u == v) continue;
      auto x = m.at_mut(u, v);
      for (auto& value : x) value = rng.uniform(-1.0, 1.0);
    }
  return m;
}

inline hcf::ProbabilityMatrix random_pmat(const std::vector<hcf::LineId>& ids,
                                          hcf::Rng& rng, double lo = 0.0,
                                          double hi = 1.0) {
  hcf::ProbabilityMatrix m(ids);
  for (hcf::LineId u : ids)
    for (hcf::LineId v : ids) {
      if (u == v) continue;
      m.set(u, v, rng.uniform(lo, hi));
    }
  return m;
}

// Naive greedy seed selection with the exact-spread evaluator; ties break to
// the lower id. Reference oracle for CELF.
inline std::vector<hcf::LineId> naive_greedy_exact(
    const hcf::ProbabilityMatrix& pmat, std::size_t k,
    const std::function<double(const std::vector<hcf::LineId>&)>& spread) {
  std::vector<hcf::LineId> selected;
  double base = 0.0;
  for (std::size_t round = 0; round < k; ++round) {
    bool have_best = false;
    double best_gain = 0.0;
    hcf::LineId best_line = 0;
    for (hcf::LineId candidate : pmat.nodes()) {
      if (std::find(selected.begin(), selected.end(), candidate) != selected.end())
        continue;
      std::vector<hcf::LineId> with = selected;
      with.push_back(candidate);
      double gain = spread(with) - base;
      if (!have_best || gain > best_gain ||
          (gain == best_gain && candidate < best_line)) {
        have_best = true;
        best_gain = gain;
        best_line = candidate;
      }
    }
    selected.push_back(best_line);
    base += best_gain;
  }
  return selected;
}

}  // namespace testutil
