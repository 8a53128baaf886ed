#include "samples.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "parallel.hpp"

namespace hcf {

namespace {

struct Key {
  std::vector<LineId> activators;
  LineId target;
  bool positive;

  bool operator==(const Key& other) const {
    return target == other.target && positive == other.positive &&
           activators == other.activators;
  }
};

struct KeyHash {
  std::size_t operator()(const Key& k) const {
    std::size_t h = std::hash<LineId>()(k.target) * 2 + (k.positive ? 1 : 0);
    for (LineId id : k.activators)
      h ^= std::hash<LineId>()(id) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

using Bucket = std::unordered_map<Key, std::uint64_t, KeyHash>;

void encode_one(const CascadeTrace& trace, const std::vector<LineId>& universe,
                const std::unordered_set<LineId>& known, Bucket& bucket) {
  std::unordered_set<LineId> seen;
  for (const auto& gen : trace.generations) {
    if (gen.empty())
      throw_data("trace " + std::to_string(trace.cascade_id) +
                 " has an empty generation");
    for (LineId id : gen) {
      if (!known.count(id))
        throw_data("trace " + std::to_string(trace.cascade_id) +
                   " contains unknown line id " + std::to_string(id));
      if (!seen.insert(id).second)
        throw_data("trace " + std::to_string(trace.cascade_id) +
                   " repeats line id " + std::to_string(id) + " across generations");
    }
  }

  std::unordered_set<LineId> failed_union;  // lines failed up to step t
  for (std::size_t t = 0; t < trace.generations.size(); ++t) {
    for (LineId id : trace.generations[t]) failed_union.insert(id);

    Key key;
    key.activators = trace.generations[t];
    std::sort(key.activators.begin(), key.activators.end());

    const bool has_next = t + 1 < trace.generations.size();
    std::unordered_set<LineId> next;
    if (has_next) {
      key.positive = true;
      for (LineId v : trace.generations[t + 1]) {
        key.target = v;
        ++bucket[key];
        next.insert(v);
      }
    }
    key.positive = false;
    for (LineId v : universe) {
      if (failed_union.count(v) || next.count(v)) continue;
      key.target = v;
      ++bucket[key];
    }
  }
}

}  // namespace

std::uint64_t SampleSet::positive_total() const {
  std::uint64_t n = 0;
  for (const Sample& s : samples)
    if (s.positive) n += s.multiplicity;
  return n;
}

std::string SampleSet::to_csv() const {
  std::ostringstream out;
  out << "activators,target,label,multiplicity\n";
  for (const Sample& s : samples) {
    for (std::size_t i = 0; i < s.activators.size(); ++i) {
      if (i) out << '|';
      out << s.activators[i];
    }
    out << ',' << s.target << ',' << (s.positive ? 1 : 0) << ',' << s.multiplicity
        << '\n';
  }
  return out.str();
}

SampleSet encode_cascades(const std::vector<CascadeTrace>& traces,
                          const std::vector<LineId>& universe) {
  std::unordered_set<LineId> known(universe.begin(), universe.end());
  std::vector<LineId> sorted_universe = universe;
  std::sort(sorted_universe.begin(), sorted_universe.end());

  // Per-chunk buckets merged in fixed order; aggregation is commutative so
  // the final map is schedule-independent anyway, but the canonical sort
  // below makes the output order explicit.
  const std::size_t chunk = 64;
  const std::size_t n_chunks = traces.empty() ? 0 : (traces.size() - 1) / chunk + 1;
  std::vector<Bucket> buckets(n_chunks);
  parallel_for(n_chunks, [&](std::size_t c) {
    const std::size_t lo = c * chunk;
    const std::size_t hi = std::min(lo + chunk, traces.size());
    for (std::size_t i = lo; i < hi; ++i)
      encode_one(traces[i], sorted_universe, known, buckets[c]);
  });
  Bucket merged;
  for (Bucket& b : buckets) {
    for (auto& [key, mult] : b) merged[key] += mult;
    b.clear();
  }

  SampleSet set;
  set.samples.reserve(merged.size());
  for (auto& [key, mult] : merged) {
    Sample s;
    s.activators = key.activators;
    s.target = key.target;
    s.positive = key.positive;
    s.multiplicity = mult;
    set.total += mult;
    set.max_activators = std::max(set.max_activators, s.activators.size());
    set.samples.push_back(std::move(s));
  }
  std::sort(set.samples.begin(), set.samples.end(), [](const Sample& a, const Sample& b) {
    if (a.activators != b.activators) return a.activators < b.activators;
    if (a.target != b.target) return a.target < b.target;
    return a.positive < b.positive;
  });
  return set;
}

CoveringProbability covering_probability(std::int64_t n_lines, std::int64_t n_samples) {
  if (n_lines < 1) throw_usage("covering probability needs at least one line");
  if (n_samples < 0) throw_usage("sample count must be non-negative");
  const double v = static_cast<double>(n_lines);
  const double s = static_cast<double>(n_samples);
  CoveringProbability out;
  // (1 - 1/V)^S and the outer power via log1p for precision near 1.
  double miss_one = n_lines == 1 ? (n_samples == 0 ? 1.0 : 0.0)
                                 : std::exp(s * std::log1p(-1.0 / v));
  out.exact = miss_one >= 1.0 ? 0.0 : std::exp(v * std::log1p(-miss_one));
  out.lower_bound = 1.0 - v * std::exp(-s / v);
  return out;
}

}  // namespace hcf
