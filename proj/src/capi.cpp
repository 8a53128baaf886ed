#include "hcf/hcf.h"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cascade.hpp"
#include "diffusion.hpp"
#include "features.hpp"
#include "grid.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "optimizer.hpp"
#include "parallel.hpp"
#include "samples.hpp"

using json = nlohmann::json;

struct hcf_grid {
  hcf::GridCase value;
};
struct hcf_traces {
  std::vector<hcf::CascadeTrace> value;
};
struct hcf_features {
  hcf::FeatureMatrix value;
};
struct hcf_model {
  hcf::HcfModel value;
};
struct hcf_pmat {
  hcf::ProbabilityMatrix value;
};

namespace {

thread_local std::string t_last_error;

int fail(const std::exception& e, int code) {
  t_last_error = e.what();
  return code;
}

template <class Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return HCF_OK;
  } catch (const hcf::Error& e) {
    return fail(e, static_cast<int>(e.code()));
  } catch (const std::exception& e) {
    return fail(e, HCF_ERR_NUMERIC);
  }
}

int require(bool ok, const char* msg) {
  if (ok) return HCF_OK;
  t_last_error = msg;
  return HCF_ERR_USAGE;
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* hcf_version(void) { return "0.1.0"; }

const char* hcf_last_error(void) { return t_last_error.c_str(); }

void hcf_set_threads(int n) { hcf::set_thread_count(n); }

int hcf_threads(void) { return hcf::thread_count(); }

void hcf_string_free(char* s) { delete[] s; }

/* ---- grid ---- */

int hcf_grid_load(const char* path, hcf_grid** out) {
  if (int rc = require(path && out, "null argument")) return rc;
  return guarded([&] { *out = new hcf_grid{hcf::load_grid_case(path)}; });
}

int hcf_grid_parse(const char* text, const char* format, hcf_grid** out) {
  if (int rc = require(text && format && out, "null argument")) return rc;
  return guarded([&] {
    std::string fmt = format;
    hcf::GridFormat f;
    if (fmt == "csv") f = hcf::GridFormat::case_csv;
    else if (fmt == "matpower") f = hcf::GridFormat::matpower;
    else hcf::throw_usage("unknown grid format '" + fmt + "'");
    *out = new hcf_grid{hcf::parse_grid_case(text, f)};
  });
}

int hcf_grid_save(const hcf_grid* grid, const char* path) {
  if (int rc = require(grid && path, "null argument")) return rc;
  return guarded([&] { hcf::save_grid_case(grid->value, path); });
}

int hcf_grid_counts(const hcf_grid* grid, int64_t* n_buses, int64_t* n_lines) {
  if (int rc = require(grid != nullptr, "null argument")) return rc;
  if (n_buses) *n_buses = static_cast<int64_t>(grid->value.buses.size());
  if (n_lines) *n_lines = static_cast<int64_t>(grid->value.lines.size());
  return HCF_OK;
}

int hcf_grid_balance(const hcf_grid* grid, double* surplus, int* balanced) {
  if (int rc = require(grid != nullptr, "null argument")) return rc;
  return guarded([&] {
    hcf::BalanceReport rep = hcf::validate_balance(grid->value);
    if (surplus) *surplus = rep.surplus;
    if (balanced) *balanced = rep.balanced ? 1 : 0;
  });
}

int hcf_grid_line_ids(const hcf_grid* grid, int64_t* ids, int64_t cap, int64_t* n) {
  if (int rc = require(grid != nullptr, "null argument")) return rc;
  auto all = grid->value.line_ids(/*in_service_only=*/true);
  if (n) *n = static_cast<int64_t>(all.size());
  if (ids) {
    int64_t fill = std::min<int64_t>(cap, static_cast<int64_t>(all.size()));
    for (int64_t i = 0; i < fill; ++i) ids[i] = all[static_cast<std::size_t>(i)];
  }
  return HCF_OK;
}

int hcf_grid_double_capacity(const hcf_grid* grid, const int64_t* line_ids, int64_t n,
                             hcf_grid** out) {
  if (int rc = require(grid && line_ids && out && n >= 0, "null argument")) return rc;
  return guarded([&] {
    std::vector<hcf::LineId> ids(line_ids, line_ids + n);
    *out = new hcf_grid{hcf::double_capacities(grid->value, ids)};
  });
}

int hcf_grid_scale_demand(const hcf_grid* grid, double factor, int scale_generation,
                          hcf_grid** out) {
  if (int rc = require(grid && out, "null argument")) return rc;
  return guarded([&] {
    *out = new hcf_grid{hcf::scale_demand(grid->value, factor, scale_generation != 0)};
  });
}

void hcf_grid_free(hcf_grid* grid) { delete grid; }

/* ---- traces ---- */

int hcf_generate(const hcf_grid* grid, int64_t runs, double fail_prob, double alpha,
                 uint64_t seed, hcf_traces** out) {
  if (int rc = require(grid && out, "null argument")) return rc;
  return guarded([&] {
    *out = new hcf_traces{hcf::generate_dataset(grid->value, runs, fail_prob, alpha, seed)};
  });
}

int hcf_traces_load(const char* path, hcf_traces** out) {
  if (int rc = require(path && out, "null argument")) return rc;
  return guarded([&] { *out = new hcf_traces{hcf::load_traces(path)}; });
}

int hcf_traces_save(const hcf_traces* traces, const char* path) {
  if (int rc = require(traces && path, "null argument")) return rc;
  return guarded([&] { hcf::save_traces(traces->value, path); });
}

int hcf_traces_count(const hcf_traces* traces, int64_t* n) {
  if (int rc = require(traces && n, "null argument")) return rc;
  *n = static_cast<int64_t>(traces->value.size());
  return HCF_OK;
}

int hcf_traces_mean_size(const hcf_traces* traces, double* mean) {
  if (int rc = require(traces && mean, "null argument")) return rc;
  return guarded([&] { *mean = hcf::mean_cascade_size(traces->value); });
}

void hcf_traces_free(hcf_traces* traces) { delete traces; }

/* ---- features ---- */

int hcf_features_extract(const hcf_grid* grid, hcf_features** out) {
  if (int rc = require(grid && out, "null argument")) return rc;
  return guarded([&] { *out = new hcf_features{hcf::extract_features(grid->value)}; });
}

int hcf_features_extract_frozen(const hcf_grid* grid, const char* spec_json,
                                hcf_features** out) {
  if (int rc = require(grid && spec_json && out, "null argument")) return rc;
  return guarded([&] {
    hcf::FeatureSpec spec = hcf::feature_spec_from_json(spec_json);
    *out = new hcf_features{hcf::extract_features(grid->value, spec)};
  });
}

int hcf_features_dim(const hcf_features* features, int64_t* d) {
  if (int rc = require(features && d, "null argument")) return rc;
  *d = static_cast<int64_t>(features->value.dim());
  return HCF_OK;
}

int hcf_features_spec_json(const hcf_features* features, char** out_json) {
  if (int rc = require(features && out_json, "null argument")) return rc;
  return guarded(
      [&] { *out_json = copy_string(hcf::feature_spec_to_json(features->value.spec())); });
}

int hcf_features_save_csv(const hcf_features* features, const char* path) {
  if (int rc = require(features && path, "null argument")) return rc;
  return guarded([&] {
    std::ofstream out(path, std::ios::binary);
    if (!out) hcf::throw_data(std::string("cannot write feature file: ") + path);
    out << features->value.to_csv();
  });
}

int hcf_features_load_csv(const char* csv_path, const char* spec_json_path,
                          hcf_features** out) {
  if (int rc = require(csv_path && spec_json_path && out, "null argument")) return rc;
  return guarded([&] {
    auto read_file = [](const char* path) {
      std::ifstream in(path, std::ios::binary);
      if (!in) hcf::throw_data(std::string("cannot open file: ") + path);
      std::ostringstream buf;
      buf << in.rdbuf();
      return buf.str();
    };
    hcf::FeatureSpec spec = hcf::feature_spec_from_json(read_file(spec_json_path));
    *out = new hcf_features{
        hcf::FeatureMatrix::from_csv(read_file(csv_path), std::move(spec))};
  });
}

void hcf_features_free(hcf_features* features) { delete features; }

/* ---- training ---- */

void hcf_train_options_init(hcf_train_options* options) {
  if (!options) return;
  options->lambda = 1e-9;
  options->bound = 10.0;
  options->memory = 10;
  options->max_iters = 500;
  options->grad_tol = 1e-6;
  options->f_tol = 1e-10;
  options->restarts = 3;
  options->seed = 0;
}

int hcf_train(const hcf_traces* traces, const hcf_features* features,
              const hcf_train_options* options, hcf_model** out_model,
              char** report_json) {
  if (int rc = require(traces && features && out_model, "null argument")) return rc;
  return guarded([&] {
    hcf_train_options defaults;
    hcf_train_options_init(&defaults);
    const hcf_train_options& opt = options ? *options : defaults;

    hcf::SampleSet samples =
        hcf::encode_cascades(traces->value, features->value.nodes());

    hcf::HcfModel init;
    init.theta.assign(features->value.dim(), 0.0);
    init.spec = features->value.spec();
    init.lambda = opt.lambda;
    init.bound = opt.bound;

    hcf::OptimizerConfig config;
    config.memory = opt.memory;
    config.max_iters = opt.max_iters;
    config.grad_tol = opt.grad_tol;
    config.f_tol = opt.f_tol;
    config.restarts = opt.restarts;
    config.rng_seed = opt.seed;

    auto [model, convergence] =
        hcf::maximize_likelihood(samples, features->value, init, config);

    std::string report_text;
    if (report_json) {
      hcf::ConcavityReport concavity =
          hcf::check_concavity(model, features->value, samples);
      json report = json::parse(convergence.to_json());
      report["diagnostics"] = {
          {"concavity", concavity.guaranteed_concave ? "guaranteed_concave"
                                                     : "not_guaranteed"},
          {"max_phi", concavity.covered_pairs ? concavity.max_phi : 0.0},
          {"covered_pairs", concavity.covered_pairs},
          {"positive_phi", concavity.positive_phi},
          {"lipschitz_bound", hcf::lipschitz_bound(samples, opt.lambda)},
          {"samples", samples.total},
          {"distinct_sample_keys", samples.samples.size()},
          {"max_activators", samples.max_activators},
      };
      report_text = report.dump(2);
    }
    *out_model = new hcf_model{std::move(model)};
    if (report_json) *report_json = copy_string(report_text);
  });
}

int hcf_samples_dump_csv(const hcf_traces* traces, const hcf_features* features,
                         const char* path) {
  if (int rc = require(traces && features && path, "null argument")) return rc;
  return guarded([&] {
    hcf::SampleSet samples =
        hcf::encode_cascades(traces->value, features->value.nodes());
    std::ofstream out(path, std::ios::binary);
    if (!out) hcf::throw_data(std::string("cannot write sample file: ") + path);
    out << samples.to_csv();
  });
}

int hcf_model_load(const char* path, hcf_model** out) {
  if (int rc = require(path && out, "null argument")) return rc;
  return guarded([&] { *out = new hcf_model{hcf::load_model(path)}; });
}

int hcf_model_save(const hcf_model* model, const char* path) {
  if (int rc = require(model && path, "null argument")) return rc;
  return guarded([&] { hcf::save_model(model->value, path); });
}

void hcf_model_free(hcf_model* model) { delete model; }

/* ---- probability matrix ---- */

int hcf_pmat_compute(const hcf_model* model, const hcf_features* features,
                     hcf_pmat** out) {
  if (int rc = require(model && features && out, "null argument")) return rc;
  return guarded([&] {
    *out = new hcf_pmat{hcf::probability_matrix(model->value, features->value)};
  });
}

int hcf_pmat_save_csv(const hcf_pmat* pmat, const char* path, double threshold) {
  if (int rc = require(pmat && path, "null argument")) return rc;
  return guarded([&] {
    std::ofstream out(path, std::ios::binary);
    if (!out) hcf::throw_data(std::string("cannot write probability file: ") + path);
    out << pmat->value.to_csv(threshold);
  });
}

int hcf_pmat_load_csv(const char* path, hcf_pmat** out) {
  if (int rc = require(path && out, "null argument")) return rc;
  return guarded([&] {
    std::ifstream in(path, std::ios::binary);
    if (!in) hcf::throw_data(std::string("cannot open probability file: ") + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    *out = new hcf_pmat{hcf::ProbabilityMatrix::from_csv(buf.str())};
  });
}

int hcf_pmat_node_count(const hcf_pmat* pmat, int64_t* n) {
  if (int rc = require(pmat && n, "null argument")) return rc;
  *n = static_cast<int64_t>(pmat->value.node_count());
  return HCF_OK;
}

void hcf_pmat_free(hcf_pmat* pmat) { delete pmat; }

/* ---- diffusion ---- */

int hcf_simulate(const hcf_pmat* pmat, const int64_t* seed_lines, int64_t n_seeds,
                 int64_t runs, uint64_t seed, hcf_traces** out) {
  if (int rc = require(pmat && seed_lines && out && n_seeds > 0, "null argument"))
    return rc;
  return guarded([&] {
    std::vector<hcf::LineId> seeds(seed_lines, seed_lines + n_seeds);
    *out = new hcf_traces{hcf::simulate_many(pmat->value, seeds, runs, seed)};
  });
}

int hcf_simulate_random(const hcf_pmat* pmat, int64_t runs, double fail_prob,
                        uint64_t seed, hcf_traces** out) {
  if (int rc = require(pmat && out, "null argument")) return rc;
  return guarded([&] {
    *out = new hcf_traces{hcf::simulate_random(pmat->value, runs, fail_prob, seed)};
  });
}

int hcf_spread_estimate(const hcf_pmat* pmat, const int64_t* seed_lines, int64_t n_seeds,
                        int64_t runs, uint64_t seed, double* mean, double* std_error) {
  if (int rc = require(pmat && seed_lines && mean && n_seeds > 0, "null argument"))
    return rc;
  return guarded([&] {
    std::vector<hcf::LineId> seeds(seed_lines, seed_lines + n_seeds);
    hcf::SpreadEstimate est = hcf::estimate_spread(pmat->value, seeds, runs, seed);
    *mean = est.mean;
    if (std_error) *std_error = est.std_error;
  });
}

int hcf_spread_exact(const hcf_pmat* pmat, const int64_t* seed_lines, int64_t n_seeds,
                     double* spread) {
  if (int rc = require(pmat && seed_lines && spread && n_seeds > 0, "null argument"))
    return rc;
  return guarded([&] {
    std::vector<hcf::LineId> seeds(seed_lines, seed_lines + n_seeds);
    *spread = hcf::exact_spread(pmat->value, seeds);
  });
}

int hcf_rank_celf(const hcf_pmat* pmat, int64_t k, int64_t runs, uint64_t seed,
                  int64_t* out_ids, double* out_marginals) {
  if (int rc = require(pmat && out_ids, "null argument")) return rc;
  return guarded([&] {
    auto ranking = hcf::celf_top_k(pmat->value, k, runs, seed);
    for (std::size_t i = 0; i < ranking.size(); ++i) {
      out_ids[i] = ranking[i].line;
      if (out_marginals) out_marginals[i] = ranking[i].marginal_spread;
    }
  });
}

/* ---- metrics ---- */

int hcf_distribution_error(const hcf_traces* a, const hcf_traces* b, const char* mode,
                           double top_fraction, int exclude_initial, double* out) {
  if (int rc = require(a && b && mode && out, "null argument")) return rc;
  return guarded([&] {
    // Shared universe: union of line ids over both trace sets.
    std::vector<hcf::LineId> universe;
    for (const auto* set : {a, b})
      for (const auto& t : set->value)
        for (const auto& gen : t.generations)
          universe.insert(universe.end(), gen.begin(), gen.end());
    std::sort(universe.begin(), universe.end());
    universe.erase(std::unique(universe.begin(), universe.end()), universe.end());

    auto da = hcf::failure_distribution(a->value, exclude_initial != 0, universe);
    auto db = hcf::failure_distribution(b->value, exclude_initial != 0, universe);
    std::optional<double> frac;
    if (top_fraction > 0.0) frac = top_fraction;
    *out = hcf::distribution_error(da, db, hcf::error_mode_from_string(mode), frac);
  });
}

int hcf_probability_error(const hcf_pmat* a, const hcf_pmat* b, const char* mode,
                          double* out) {
  if (int rc = require(a && b && mode && out, "null argument")) return rc;
  return guarded([&] {
    *out = hcf::probability_error(a->value, b->value, hcf::error_mode_from_string(mode));
  });
}

int hcf_size_histogram(const hcf_traces* traces, const double* edges, int64_t n_edges,
                       double* masses) {
  if (int rc = require(traces && edges && masses && n_edges >= 2, "null argument"))
    return rc;
  return guarded([&] {
    std::vector<double> bin_edges(edges, edges + n_edges);
    auto bins = hcf::size_histogram(traces->value, bin_edges);
    for (std::size_t i = 0; i < bins.size(); ++i) masses[i] = bins[i].mass;
  });
}

/* ---- theory ---- */

int hcf_covering_probability(int64_t n_lines, int64_t n_samples, double* p_cover,
                             double* lower_bound) {
  if (int rc = require(p_cover != nullptr, "null argument")) return rc;
  return guarded([&] {
    hcf::CoveringProbability cov = hcf::covering_probability(n_lines, n_samples);
    *p_cover = cov.exact;
    if (lower_bound) *lower_bound = cov.lower_bound;
  });
}

int hcf_lipschitz_bound(int64_t max_activators, double lambda, double* out) {
  if (int rc = require(out != nullptr, "null argument")) return rc;
  if (int rc = require(max_activators > 0, "max_activators must be positive")) return rc;
  return guarded([&] {
    *out = hcf::lipschitz_bound(static_cast<std::size_t>(max_activators), lambda);
  });
}

int hcf_sample_complexity(double epsilon, double delta, int64_t dim,
                          int64_t max_activators, double lambda, double bound,
                          double* out_m) {
  if (int rc = require(out_m != nullptr, "null argument")) return rc;
  if (int rc = require(dim > 0 && max_activators > 0, "d and V must be positive"))
    return rc;
  return guarded([&] {
    *out_m = hcf::sample_complexity_bound(epsilon, delta, static_cast<std::size_t>(dim),
                                          static_cast<std::size_t>(max_activators),
                                          lambda, bound);
  });
}

} /* extern "C" */
