#include "cascade.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "parallel.hpp"
#include "rng.hpp"

namespace hcf {

using json = nlohmann::json;

CascadeTrace run_cascade(const GridCase& grid, const std::vector<LineId>& initial_outages,
                         double alpha) {
  if (initial_outages.empty()) throw_usage("cascade needs at least one initial outage");
  if (alpha < 1.0) throw_usage("overload tolerance alpha must be >= 1");

  CascadeTrace trace;
  std::unordered_set<LineId> failed;
  std::vector<LineId> generation;
  for (LineId id : initial_outages) {
    const Line* l = grid.find_line(id);
    if (!l) throw_data("unknown line id " + std::to_string(id));
    if (failed.insert(id).second) generation.push_back(id);
  }
  std::sort(generation.begin(), generation.end());
  trace.generations.push_back(generation);

  for (;;) {
    FlowState flow = solve_dc_flow(grid, failed);
    std::vector<LineId> tripped;
    for (const Line& l : grid.lines) {
      if (!l.in_service || failed.count(l.id)) continue;
      if (std::abs(flow.flow(l.id)) > alpha * l.capacity) tripped.push_back(l.id);
    }
    if (tripped.empty()) break;
    for (LineId id : tripped) failed.insert(id);
    trace.generations.push_back(std::move(tripped));
  }
  return trace;
}

std::vector<CascadeTrace> generate_dataset(const GridCase& grid, std::int64_t n_runs,
                                           double line_fail_prob, double alpha,
                                           std::uint64_t rng_seed) {
  if (n_runs < 0) throw_usage("run count must be non-negative");
  if (line_fail_prob <= 0.0 || line_fail_prob >= 1.0)
    throw_usage("line failure probability must lie in (0, 1)");

  const std::vector<LineId> candidates = grid.line_ids(/*in_service_only=*/true);
  if (candidates.empty()) throw_data("grid has no in-service lines");

  std::vector<CascadeTrace> traces(static_cast<std::size_t>(n_runs));
  parallel_for(static_cast<std::size_t>(n_runs), [&](std::size_t run) {
    Rng rng = Rng::for_stream(rng_seed, run);
    std::vector<LineId> initial;
    while (initial.empty()) {
      for (LineId id : candidates)
        if (rng.bernoulli(line_fail_prob)) initial.push_back(id);
    }
    traces[run] = run_cascade(grid, initial, alpha);
    traces[run].cascade_id = static_cast<std::int64_t>(run);
  });
  return traces;
}

std::string traces_to_jsonl(const std::vector<CascadeTrace>& traces) {
  std::ostringstream out;
  for (const CascadeTrace& t : traces) {
    json obj;
    obj["id"] = t.cascade_id;
    obj["generations"] = t.generations;
    out << obj.dump() << '\n';
  }
  return out.str();
}

std::vector<CascadeTrace> traces_from_jsonl(const std::string& text) {
  std::vector<CascadeTrace> traces;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.contains("id") || !obj.contains("generations"))
      throw_data("bad trace record at line " + std::to_string(line_no));
    CascadeTrace t;
    t.cascade_id = obj["id"].get<std::int64_t>();
    t.generations = obj["generations"].get<std::vector<std::vector<LineId>>>();
    if (t.generations.empty() || t.generations.front().empty())
      throw_data("trace at line " + std::to_string(line_no) + " has no initial outages");
    traces.push_back(std::move(t));
  }
  return traces;
}

void save_traces(const std::vector<CascadeTrace>& traces, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data("cannot write trace file: " + path);
  out << traces_to_jsonl(traces);
}

std::vector<CascadeTrace> load_traces(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_data("cannot open trace file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return traces_from_jsonl(buf.str());
}

}  // namespace hcf
