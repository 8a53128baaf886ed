#include "features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <deque>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "parallel.hpp"

namespace hcf {

using json = nlohmann::json;

namespace {

// Simple undirected bus graph over in-service lines. Parallel lines collapse
// into one edge; their multiplicity is tracked so edge betweenness can be
// shared among them.
struct BusGraph {
  std::vector<BusId> buses;                     // sorted
  std::unordered_map<BusId, int> index;
  std::vector<std::vector<int>> neighbors;      // simple-graph adjacency
  std::map<std::pair<int, int>, int> edge_mult; // canonical (min,max) -> line count
  std::vector<int> line_degree;                 // multigraph degree per bus

  explicit BusGraph(const GridCase& grid) {
    buses.reserve(grid.buses.size());
    for (const Bus& b : grid.buses) buses.push_back(b.id);
    for (std::size_t i = 0; i < buses.size(); ++i) index[buses[i]] = static_cast<int>(i);
    neighbors.resize(buses.size());
    line_degree.assign(buses.size(), 0);
    for (const Line& l : grid.lines) {
      if (!l.in_service) continue;
      int a = index[l.from], b = index[l.to];
      auto key = std::minmax(a, b);
      if (edge_mult[{key.first, key.second}]++ == 0) {
        neighbors[a].push_back(b);
        neighbors[b].push_back(a);
      }
      ++line_degree[a];
      ++line_degree[b];
    }
    for (auto& adj : neighbors) std::sort(adj.begin(), adj.end());
  }

  int n() const { return static_cast<int>(buses.size()); }
};

void bfs_distances(const BusGraph& g, int source, std::vector<int>& dist) {
  dist.assign(g.n(), -1);
  std::deque<int> queue;
  dist[source] = 0;
  queue.push_back(source);
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    for (int w : g.neighbors[v]) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
    }
  }
}

// Brandes accumulation from a single source on the unweighted simple graph.
// Adds the source's contribution to distances and per-edge betweenness.
void brandes_from(const BusGraph& g, int source, std::vector<int>& dist,
                  std::map<std::pair<int, int>, double>& edge_bc) {
  const int n = g.n();
  std::vector<double> sigma(n, 0.0);
  std::vector<double> delta(n, 0.0);
  std::vector<std::vector<int>> preds(n);
  std::vector<int> order;
  dist.assign(n, -1);
  std::deque<int> queue;
  dist[source] = 0;
  sigma[source] = 1.0;
  queue.push_back(source);
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    order.push_back(v);
    for (int w : g.neighbors[v]) {
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        queue.push_back(w);
      }
      if (dist[w] == dist[v] + 1) {
        sigma[w] += sigma[v];
        preds[w].push_back(v);
      }
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    int w = *it;
    for (int v : preds[w]) {
      double share = sigma[v] / sigma[w] * (1.0 + delta[w]);
      delta[v] += share;
      auto key = std::minmax(v, w);
      edge_bc[{key.first, key.second}] += share;
    }
  }
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double normalize(double raw, double lo, double hi) {
  if (hi <= lo) return 0.0;  // constant feature
  double x = -1.0 + 2.0 * (raw - lo) / (hi - lo);
  return std::clamp(x, -1.0, 1.0);
}

}  // namespace

FeatureSpec FeatureSpec::identity(std::size_t d, const std::string& prefix) {
  FeatureSpec spec;
  spec.names.reserve(d);
  for (std::size_t i = 0; i < d; ++i) spec.names.push_back(prefix + std::to_string(i));
  spec.lo.assign(d, -1.0);
  spec.hi.assign(d, 1.0);
  return spec;
}

FeatureMatrix::FeatureMatrix(std::vector<LineId> nodes, FeatureSpec spec)
    : nodes_(std::move(nodes)), spec_(std::move(spec)) {
  std::sort(nodes_.begin(), nodes_.end());
  values_.assign(nodes_.size() * nodes_.size() * spec_.dim(), 0.0);
}

int FeatureMatrix::node_index(LineId id) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id);
  if (it == nodes_.end() || *it != id) return -1;
  return static_cast<int>(it - nodes_.begin());
}

std::span<const double> FeatureMatrix::at(LineId u, LineId v) const {
  int ui = node_index(u), vi = node_index(v);
  if (ui < 0 || vi < 0) throw_data("unknown line id in feature lookup");
  if (ui == vi) throw_usage("no self-pair features (u == v)");
  return at_index(ui, vi);
}

std::span<double> FeatureMatrix::at_mut(LineId u, LineId v) {
  int ui = node_index(u), vi = node_index(v);
  if (ui < 0 || vi < 0) throw_data("unknown line id in feature lookup");
  if (ui == vi) throw_usage("no self-pair features (u == v)");
  const std::size_t d = spec_.dim();
  return {values_.data() + (static_cast<std::size_t>(ui) * nodes_.size() + vi) * d, d};
}

std::span<const double> FeatureMatrix::at_index(int ui, int vi) const {
  const std::size_t d = spec_.dim();
  return {values_.data() + (static_cast<std::size_t>(ui) * nodes_.size() + vi) * d, d};
}

const std::vector<std::string>& line_feature_names() {
  static const std::vector<std::string> names = {
      "susceptance",   "capacity",     "abs_flow",       "loading",
      "demand_sum",    "gen_sum",      "degree_sum",     "betweenness",
      "island_share",  "spare_capacity", "neighbor_degree",
  };
  return names;
}

const std::vector<std::string>& pair_feature_names() {
  static const std::vector<std::string> names = {"shared_bus", "line_distance",
                                                 "loading_gap"};
  return names;
}

std::vector<LineFeatures> extract_line_features(const GridCase& grid,
                                                const FlowState& base_flow) {
  if (base_flow.line_flows.empty() && !grid.lines.empty())
    throw_usage("base flow has not been solved");

  BusGraph g(grid);

  // All-pairs BFS: exact edge betweenness plus island sizes.
  std::map<std::pair<int, int>, double> edge_bc;
  std::vector<int> component(g.n(), -1);
  std::vector<int> component_size;
  {
    std::vector<int> dist;
    for (int s = 0; s < g.n(); ++s) {
      brandes_from(g, s, dist, edge_bc);
      if (component[s] < 0) {
        int id = static_cast<int>(component_size.size());
        int size = 0;
        for (int v = 0; v < g.n(); ++v)
          if (dist[v] >= 0 && component[v] < 0) {
            component[v] = id;
            ++size;
          }
        component_size.push_back(size);
      }
    }
    // Each unordered pair was visited from both endpoints.
    for (auto& [key, value] : edge_bc) value /= 2.0;
  }

  std::vector<double> mean_neighbor_degree(g.n(), 0.0);
  for (int v = 0; v < g.n(); ++v) {
    if (g.neighbors[v].empty()) continue;
    double acc = 0.0;
    for (int w : g.neighbors[v]) acc += static_cast<double>(g.line_degree[w]);
    mean_neighbor_degree[v] = acc / static_cast<double>(g.neighbors[v].size());
  }

  std::vector<LineFeatures> table;
  table.reserve(grid.lines.size());
  for (const Line& l : grid.lines) {
    if (!l.in_service) continue;
    int a = g.index.at(l.from), b = g.index.at(l.to);
    double flow = std::abs(base_flow.flow(l.id));
    auto edge_key = std::minmax(a, b);
    auto bc_it = edge_bc.find({edge_key.first, edge_key.second});
    double bc = bc_it == edge_bc.end() ? 0.0 : bc_it->second;
    int mult = g.edge_mult.at({edge_key.first, edge_key.second});
    const Bus* from = grid.find_bus(l.from);
    const Bus* to = grid.find_bus(l.to);

    LineFeatures f;
    f.id = l.id;
    f.values = {
        l.susceptance,
        l.capacity,
        flow,
        flow / l.capacity,
        from->demand + to->demand,
        from->generation + to->generation,
        static_cast<double>(g.line_degree[a] + g.line_degree[b]),
        bc / static_cast<double>(mult),  // parallel lines share the edge count
        static_cast<double>(component_size[component[a]]) / static_cast<double>(g.n()),
        l.capacity - flow,
        0.5 * (mean_neighbor_degree[a] + mean_neighbor_degree[b]),
    };
    table.push_back(std::move(f));
  }
  return table;
}

FeatureMatrix build_pair_features(const GridCase& grid,
                                  const std::vector<LineFeatures>& table,
                                  const std::optional<FeatureSpec>& spec) {
  const std::size_t n_line_feats = line_feature_names().size();
  const std::size_t n_pair_feats = pair_feature_names().size();
  const std::size_t d = 2 * n_line_feats + n_pair_feats;
  if (table.empty()) throw_usage("empty line feature table");
  for (const LineFeatures& f : table)
    if (f.values.size() != n_line_feats)
      throw_data("line feature table has wrong width");
  if (spec && spec->dim() != d)
    throw_usage("feature spec dimension " + std::to_string(spec->dim()) +
                " does not match expected " + std::to_string(d));

  BusGraph g(grid);

  // BFS distances between all buses, for the line-to-line distance feature.
  std::vector<std::vector<int>> bus_dist(g.n());
  for (int s = 0; s < g.n(); ++s) bfs_distances(g, s, bus_dist[s]);
  const double unreachable = static_cast<double>(g.n());
  auto line_distance = [&](const Line* u, const Line* v) {
    int ua = g.index.at(u->from), ub = g.index.at(u->to);
    int va = g.index.at(v->from), vb = g.index.at(v->to);
    int best = -1;
    for (int x : {ua, ub})
      for (int y : {va, vb}) {
        int dxy = bus_dist[x][y];
        if (dxy >= 0 && (best < 0 || dxy < best)) best = dxy;
      }
    return best < 0 ? unreachable : static_cast<double>(best);
  };

  std::vector<LineId> ids;
  std::unordered_map<LineId, const LineFeatures*> feats;
  for (const LineFeatures& f : table) {
    if (!grid.find_line(f.id))
      throw_data("feature table references unknown line " + std::to_string(f.id));
    ids.push_back(f.id);
    feats[f.id] = &f;
  }

  const std::size_t loading_idx = 3;  // index of "loading" in line_feature_names()
  const std::size_t n = ids.size();

  // Raw pairwise values, computed the same way in the fit and the fill.
  auto pair_raw = [&](LineId u_id, LineId v_id) {
    const Line* u = grid.find_line(u_id);
    const Line* v = grid.find_line(v_id);
    bool shared = u->from == v->from || u->from == v->to || u->to == v->from ||
                  u->to == v->to;
    double gap = std::abs(feats.at(u_id)->values[loading_idx] -
                          feats.at(v_id)->values[loading_idx]);
    return std::array<double, 3>{shared ? 1.0 : 0.0, line_distance(u, v), gap};
  };

  FeatureSpec fitted;
  if (spec) {
    fitted = *spec;
  } else {
    fitted.names.reserve(d);
    for (const auto& name : line_feature_names()) fitted.names.push_back("u_" + name);
    for (const auto& name : line_feature_names()) fitted.names.push_back("v_" + name);
    for (const auto& name : pair_feature_names()) fitted.names.push_back(name);
    fitted.lo.assign(d, 0.0);
    fitted.hi.assign(d, 0.0);
    // Per-line bounds over lines; pairwise bounds over ordered pairs. The u
    // and v blocks share the same per-line bounds by construction.
    for (std::size_t k = 0; k < n_line_feats; ++k) {
      double lo = table.front().values[k], hi = lo;
      for (const LineFeatures& f : table) {
        lo = std::min(lo, f.values[k]);
        hi = std::max(hi, f.values[k]);
      }
      fitted.lo[k] = fitted.lo[n_line_feats + k] = lo;
      fitted.hi[k] = fitted.hi[n_line_feats + k] = hi;
    }
    for (std::size_t k = 0; k < n_pair_feats; ++k) {
      bool first = true;
      double lo = 0.0, hi = 0.0;
      for (std::size_t ui = 0; ui < n; ++ui)
        for (std::size_t vi = 0; vi < n; ++vi) {
          if (ui == vi) continue;
          double raw = pair_raw(ids[ui], ids[vi])[k];
          if (first) {
            lo = hi = raw;
            first = false;
          } else {
            lo = std::min(lo, raw);
            hi = std::max(hi, raw);
          }
        }
      fitted.lo[2 * n_line_feats + k] = lo;
      fitted.hi[2 * n_line_feats + k] = hi;
    }
  }

  FeatureMatrix matrix(ids, fitted);
  const FeatureSpec& fs = matrix.spec();
  parallel_for(n, [&](std::size_t ui) {
    for (std::size_t vi = 0; vi < n; ++vi) {
      if (ui == vi) continue;
      auto x = matrix.at_mut(matrix.nodes()[ui], matrix.nodes()[vi]);
      const auto& fu = feats.at(matrix.nodes()[ui])->values;
      const auto& fv = feats.at(matrix.nodes()[vi])->values;
      for (std::size_t k = 0; k < n_line_feats; ++k) {
        x[k] = normalize(fu[k], fs.lo[k], fs.hi[k]);
        x[n_line_feats + k] = normalize(fv[k], fs.lo[n_line_feats + k],
                                        fs.hi[n_line_feats + k]);
      }
      auto raw = pair_raw(matrix.nodes()[ui], matrix.nodes()[vi]);
      for (std::size_t k = 0; k < n_pair_feats; ++k) {
        std::size_t col = 2 * n_line_feats + k;
        x[col] = normalize(raw[k], fs.lo[col], fs.hi[col]);
      }
    }
  });
  return matrix;
}

FeatureMatrix extract_features(const GridCase& grid,
                               const std::optional<FeatureSpec>& spec) {
  FlowState base = solve_dc_flow(grid);
  auto table = extract_line_features(grid, base);
  return build_pair_features(grid, table, spec);
}

std::string FeatureMatrix::to_csv() const {
  std::ostringstream out;
  out << "u,v";
  for (const auto& name : spec_.names) out << ',' << name;
  out << '\n';
  for (std::size_t ui = 0; ui < nodes_.size(); ++ui)
    for (std::size_t vi = 0; vi < nodes_.size(); ++vi) {
      if (ui == vi) continue;
      out << nodes_[ui] << ',' << nodes_[vi];
      auto x = at_index(static_cast<int>(ui), static_cast<int>(vi));
      for (double v : x) out << ',' << format_real(v);
      out << '\n';
    }
  return out.str();
}

FeatureMatrix FeatureMatrix::from_csv(const std::string& csv, FeatureSpec spec) {
  std::istringstream in(csv);
  std::string header;
  if (!std::getline(in, header)) throw_data("empty feature CSV");

  struct Row {
    LineId u, v;
    std::vector<double> x;
  };
  std::vector<Row> rows;
  std::vector<LineId> ids;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    Row row;
    int col = 0;
    while (std::getline(ls, tok, ',')) {
      ++col;
      try {
        if (col == 1) row.u = std::stoll(tok);
        else if (col == 2) row.v = std::stoll(tok);
        else row.x.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw_data("bad feature CSV value at line " + std::to_string(line_no));
      }
    }
    if (row.x.size() != spec.dim())
      throw_data("feature CSV row at line " + std::to_string(line_no) +
                 " has wrong dimension");
    ids.push_back(row.u);
    ids.push_back(row.v);
    rows.push_back(std::move(row));
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  FeatureMatrix m(ids, std::move(spec));
  for (const Row& row : rows) {
    auto x = m.at_mut(row.u, row.v);
    std::copy(row.x.begin(), row.x.end(), x.begin());
  }
  return m;
}

std::string feature_spec_to_json(const FeatureSpec& spec) {
  json normalization = json::array();
  for (std::size_t i = 0; i < spec.dim(); ++i)
    normalization.push_back({spec.lo[i], spec.hi[i]});
  json obj;
  obj["names"] = spec.names;
  obj["normalization"] = normalization;
  return obj.dump(2);
}

FeatureSpec feature_spec_from_json(const std::string& text) {
  json obj = json::parse(text, nullptr, false);
  if (obj.is_discarded() || !obj.contains("names") || !obj.contains("normalization"))
    throw_data("bad feature spec JSON");
  FeatureSpec spec;
  spec.names = obj["names"].get<std::vector<std::string>>();
  for (const auto& pair : obj["normalization"]) {
    spec.lo.push_back(pair.at(0).get<double>());
    spec.hi.push_back(pair.at(1).get<double>());
  }
  if (spec.lo.size() != spec.names.size())
    throw_data("feature spec names/normalization size mismatch");
  return spec;
}

}  // namespace hcf
