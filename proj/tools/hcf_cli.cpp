// Batch front end for the hcf shared library. Subcommands cover the full
// workflow: generate cascade data from a grid, extract features, train the
// diffusion model, export the probability matrix, simulate predictions,
// evaluate, rank critical lines and test mitigations. Every run writes its
// outputs plus a manifest into --out.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hcf/hcf.h"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr double kDefaultFailProb = 1.0 / 516.0;

struct Cleanup {
  std::vector<std::function<void()>> actions;
  ~Cleanup() {
    for (auto it = actions.rbegin(); it != actions.rend(); ++it) (*it)();
  }
  template <class T, class F>
  T* own(T* handle, F free_fn) {
    if (handle) actions.push_back([handle, free_fn] { free_fn(handle); });
    return handle;
  }
};

[[noreturn]] void die(int code) {
  std::cerr << "error: " << hcf_last_error() << '\n';
  std::exit(code);
}

void check(int rc) {
  if (rc != HCF_OK) die(rc);
}

class Manifest {
 public:
  Manifest(std::string command, const fs::path& out_dir)
      : command_(std::move(command)), out_dir_(out_dir),
        start_(std::chrono::steady_clock::now()) {
    fs::create_directories(out_dir_);
  }

  void input(const std::string& name, const std::string& path) {
    inputs_[name] = path;
  }
  template <class T>
  void flag(const std::string& name, const T& value) {
    flags_[name] = value;
  }
  void seed(std::uint64_t s) { seed_ = s; }

  fs::path path(const std::string& name) const { return out_dir_ / name; }

  void write() const {
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                 start_).count();
    json obj;
    obj["command"] = command_;
    obj["inputs"] = inputs_;
    obj["flags"] = flags_;
    if (seed_) obj["rng_seed"] = *seed_;
    obj["tool_version"] = hcf_version();
    obj["wall_time_s"] = elapsed;
    std::ofstream out(out_dir_ / "manifest.json", std::ios::binary);
    out << obj.dump(2) << '\n';
  }

 private:
  std::string command_;
  fs::path out_dir_;
  json inputs_ = json::object();
  json flags_ = json::object();
  std::optional<std::uint64_t> seed_;
  std::chrono::steady_clock::time_point start_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write " << path << '\n';
    std::exit(HCF_ERR_DATA);
  }
  out << text;
}

std::vector<std::int64_t> parse_id_list(const std::string& csv) {
  std::vector<std::int64_t> out;
  std::istringstream in(csv);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stoll(tok));
  }
  return out;
}

std::vector<double> parse_real_list(const std::string& csv) {
  std::vector<double> out;
  std::istringstream in(csv);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  return out;
}

// Ranked-lines CSV from the rank subcommand: rank,line_id,marginal_spread.
std::vector<std::int64_t> read_ranked_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot open ranked file " << path << '\n';
    std::exit(HCF_ERR_DATA);
  }
  std::vector<std::int64_t> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.rfind("rank,", 0) == 0 || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string rank, id;
    if (std::getline(ls, rank, ',') && std::getline(ls, id, ','))
      ids.push_back(std::stoll(id));
  }
  return ids;
}

json histogram_json(const std::vector<double>& edges, const std::vector<double>& masses) {
  json rows = json::array();
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    rows.push_back({{"bin_lo", edges[i]}, {"bin_hi", edges[i + 1]}, {"mass", masses[i]}});
  return rows;
}

std::string histogram_csv(const std::vector<double>& edges,
                          const std::vector<double>& masses) {
  std::ostringstream out;
  out << "bin_lo,bin_hi,mass\n";
  char buf[96];
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g", edges[i], edges[i + 1],
                  masses[i]);
    out << buf << '\n';
  }
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hyperparametric cascading-failure diffusion toolkit"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: HCF_THREADS or cores)");

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "generate DC overload cascades from a grid");
  std::string gen_grid, gen_out = "out";
  std::int64_t gen_runs = 1000;
  double gen_fail_prob = kDefaultFailProb, gen_alpha = 1.0;
  std::uint64_t gen_seed = 0;
  gen->add_option("grid", gen_grid, "case file (.case.csv or .m)")->required();
  gen->add_option("--runs", gen_runs, "number of cascades");
  gen->add_option("--fail-prob", gen_fail_prob, "initial failure probability per line");
  gen->add_option("--alpha", gen_alpha, "overload tolerance factor (>= 1)");
  gen->add_option("--seed", gen_seed, "rng seed");
  gen->add_option("-o,--out", gen_out, "output directory");

  // ---- features ----
  auto* feat = app.add_subcommand("features", "extract pairwise line features");
  std::string feat_grid, feat_spec, feat_out = "out";
  feat->add_option("grid", feat_grid, "case file")->required();
  feat->add_option("--spec", feat_spec, "frozen feature spec JSON to apply");
  feat->add_option("-o,--out", feat_out, "output directory");

  // ---- train ----
  auto* train = app.add_subcommand("train", "learn the diffusion model from traces");
  std::string train_traces, train_features, train_spec, train_out = "out";
  hcf_train_options topt;
  hcf_train_options_init(&topt);
  train->add_option("traces", train_traces, "trace file (JSONL)")->required();
  train->add_option("--features", train_features, "feature matrix CSV")->required();
  train->add_option("--spec", train_spec, "feature spec JSON")->required();
  train->add_option("--lambda", topt.lambda, "probability precision floor");
  train->add_option("--B", topt.bound, "hypothesis box half-width");
  train->add_option("--memory", topt.memory, "L-BFGS history pairs");
  train->add_option("--max-iters", topt.max_iters, "iteration cap");
  train->add_option("--grad-tol", topt.grad_tol, "projected-gradient tolerance");
  train->add_option("--f-tol", topt.f_tol, "relative improvement floor");
  train->add_option("--restarts", topt.restarts, "extra random starts");
  train->add_option("--seed", topt.seed, "rng seed");
  bool train_dump_samples = false;
  train->add_flag("--dump-samples", train_dump_samples,
                  "also write the aggregated sample keys as samples.csv");
  train->add_option("-o,--out", train_out, "output directory");

  // ---- pmat ----
  auto* pmat_cmd = app.add_subcommand("pmat", "export the influence probability matrix");
  std::string pmat_model, pmat_features, pmat_spec, pmat_out = "out";
  double pmat_threshold = 0.01;
  pmat_cmd->add_option("model", pmat_model, "model JSON")->required();
  pmat_cmd->add_option("--features", pmat_features, "feature matrix CSV")->required();
  pmat_cmd->add_option("--spec", pmat_spec, "feature spec JSON")->required();
  pmat_cmd->add_option("--threshold", pmat_threshold, "drop pairs below this probability");
  pmat_cmd->add_option("-o,--out", pmat_out, "output directory");

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate",
                                 "Monte Carlo diffusion from a probability matrix");
  std::string sim_pmat, sim_seeds, sim_out = "out";
  std::int64_t sim_runs = 1000;
  double sim_fail_prob = kDefaultFailProb;
  std::uint64_t sim_seed = 0;
  sim->add_option("pmat", sim_pmat, "probability matrix CSV")->required();
  sim->add_option("--seeds", sim_seeds,
                  "comma-separated seed line ids (default: random contingencies)");
  sim->add_option("--runs", sim_runs, "number of rollouts");
  sim->add_option("--fail-prob", sim_fail_prob,
                  "initial failure probability per line (random seeding)");
  sim->add_option("--seed", sim_seed, "rng seed");
  sim->add_option("-o,--out", sim_out, "output directory");

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "distribution / probability error reports");
  std::vector<std::string> eval_traces, eval_pmats;
  std::string eval_out = "out";
  double eval_top_frac = 0.05;
  bool eval_include_initial = false;
  eval->add_option("--traces", eval_traces, "two trace files: model data")->expected(2);
  eval->add_option("--pmats", eval_pmats, "two probability matrices: model reference")
      ->expected(2);
  eval->add_option("--top-frac", eval_top_frac,
                   "evaluate only this fraction of the most critical lines (0 = all)");
  eval->add_flag("--include-initial", eval_include_initial,
                 "count generation-0 failures too");
  eval->add_option("-o,--out", eval_out, "output directory");

  // ---- rank ----
  auto* rank = app.add_subcommand("rank", "CELF ranking of critical lines");
  std::string rank_pmat, rank_out = "out";
  std::int64_t rank_k = 10, rank_runs = 10000;
  std::uint64_t rank_seed = 0;
  rank->add_option("pmat", rank_pmat, "probability matrix CSV")->required();
  rank->add_option("--k", rank_k, "number of lines to select");
  rank->add_option("--runs", rank_runs, "Monte Carlo runs per spread estimate");
  rank->add_option("--seed", rank_seed, "rng seed");
  rank->add_option("-o,--out", rank_out, "output directory");

  // ---- mitigate ----
  auto* mit = app.add_subcommand("mitigate",
                                 "double capacities of ranked lines, regenerate, compare");
  std::string mit_grid, mit_ranked, mit_bins = "0,15,30,45,60", mit_out = "out";
  std::int64_t mit_top = 10, mit_runs = 1000;
  double mit_fail_prob = kDefaultFailProb, mit_alpha = 1.0;
  std::uint64_t mit_seed = 0;
  mit->add_option("grid", mit_grid, "case file")->required();
  mit->add_option("--ranked", mit_ranked, "ranked lines CSV (from rank)")->required();
  mit->add_option("--top", mit_top, "how many ranked lines to reinforce");
  mit->add_option("--runs", mit_runs, "cascades per side");
  mit->add_option("--fail-prob", mit_fail_prob, "initial failure probability per line");
  mit->add_option("--alpha", mit_alpha, "overload tolerance factor");
  mit->add_option("--bins", mit_bins, "histogram bin edges, comma-separated");
  mit->add_option("--seed", mit_seed, "rng seed");
  mit->add_option("-o,--out", mit_out, "output directory");

  // ---- theory ----
  auto* theory = app.add_subcommand("theory", "sample-complexity and coverage printouts");
  std::int64_t th_lines = 0, th_samples = 0, th_d = 25, th_v = 5;
  double th_eps = 0.1, th_delta = 0.05, th_lambda = 1e-9, th_bound = 10.0;
  std::string th_out;
  theory->add_option("--lines", th_lines, "line count for the covering probability");
  theory->add_option("--samples", th_samples,
                     "sample count for the covering probability");
  theory->add_option("--eps", th_eps, "target excess risk");
  theory->add_option("--delta", th_delta, "failure probability");
  theory->add_option("--d", th_d, "feature dimension");
  theory->add_option("--V", th_v, "max activator-set size");
  theory->add_option("--lambda", th_lambda, "probability precision floor");
  theory->add_option("--B", th_bound, "hypothesis box half-width");
  theory->add_option("-o,--out", th_out, "optional output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : HCF_ERR_USAGE;
  }

  if (threads > 0) hcf_set_threads(threads);
  Cleanup cleanup;

  try {
    if (*gen) {
      Manifest manifest("gen", gen_out);
      manifest.input("grid", gen_grid);
      manifest.flag("runs", gen_runs);
      manifest.flag("fail_prob", gen_fail_prob);
      manifest.flag("alpha", gen_alpha);
      manifest.seed(gen_seed);
      hcf_grid* grid = nullptr;
      check(hcf_grid_load(gen_grid.c_str(), &grid));
      cleanup.own(grid, hcf_grid_free);
      double surplus = 0.0;
      int balanced = 0;
      check(hcf_grid_balance(grid, &surplus, &balanced));
      if (!balanced)
        std::cerr << "warning: grid is unbalanced (surplus " << surplus << ")\n";
      hcf_traces* traces = nullptr;
      check(hcf_generate(grid, gen_runs, gen_fail_prob, gen_alpha, gen_seed, &traces));
      cleanup.own(traces, hcf_traces_free);
      check(hcf_traces_save(traces, manifest.path("traces.jsonl").string().c_str()));
      double mean = 0.0;
      check(hcf_traces_mean_size(traces, &mean));
      std::cout << "generated " << gen_runs << " cascades, mean size " << mean << '\n';
      manifest.write();
    } else if (*feat) {
      Manifest manifest("features", feat_out);
      manifest.input("grid", feat_grid);
      hcf_grid* grid = nullptr;
      check(hcf_grid_load(feat_grid.c_str(), &grid));
      cleanup.own(grid, hcf_grid_free);
      hcf_features* features = nullptr;
      if (feat_spec.empty()) {
        check(hcf_features_extract(grid, &features));
      } else {
        manifest.input("spec", feat_spec);
        std::ifstream in(feat_spec, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        check(hcf_features_extract_frozen(grid, buf.str().c_str(), &features));
      }
      cleanup.own(features, hcf_features_free);
      check(hcf_features_save_csv(features,
                                  manifest.path("features.csv").string().c_str()));
      char* spec_json = nullptr;
      check(hcf_features_spec_json(features, &spec_json));
      write_text(manifest.path("feature_spec.json"), std::string(spec_json) + "\n");
      hcf_string_free(spec_json);
      std::int64_t d = 0;
      check(hcf_features_dim(features, &d));
      std::cout << "extracted features, d = " << d << '\n';
      manifest.write();
    } else if (*train) {
      Manifest manifest("train", train_out);
      manifest.input("traces", train_traces);
      manifest.input("features", train_features);
      manifest.input("spec", train_spec);
      manifest.flag("lambda", topt.lambda);
      manifest.flag("B", topt.bound);
      manifest.flag("restarts", topt.restarts);
      manifest.flag("max_iters", topt.max_iters);
      manifest.seed(topt.seed);
      hcf_traces* traces = nullptr;
      check(hcf_traces_load(train_traces.c_str(), &traces));
      cleanup.own(traces, hcf_traces_free);
      hcf_features* features = nullptr;
      check(hcf_features_load_csv(train_features.c_str(), train_spec.c_str(), &features));
      cleanup.own(features, hcf_features_free);
      if (train_dump_samples)
        check(hcf_samples_dump_csv(traces, features,
                                   manifest.path("samples.csv").string().c_str()));
      hcf_model* model = nullptr;
      char* report = nullptr;
      check(hcf_train(traces, features, &topt, &model, &report));
      cleanup.own(model, hcf_model_free);
      check(hcf_model_save(model, manifest.path("model.json").string().c_str()));
      write_text(manifest.path("report.json"), std::string(report) + "\n");
      json rep = json::parse(report);
      hcf_string_free(report);
      std::cout << "trained: likelihood " << rep["likelihood"].get<double>()
                << ", concavity " << rep["diagnostics"]["concavity"].get<std::string>()
                << ", Lipschitz bound "
                << rep["diagnostics"]["lipschitz_bound"].get<double>() << '\n';
      manifest.write();
    } else if (*pmat_cmd) {
      Manifest manifest("pmat", pmat_out);
      manifest.input("model", pmat_model);
      manifest.input("features", pmat_features);
      manifest.input("spec", pmat_spec);
      manifest.flag("threshold", pmat_threshold);
      hcf_model* model = nullptr;
      check(hcf_model_load(pmat_model.c_str(), &model));
      cleanup.own(model, hcf_model_free);
      hcf_features* features = nullptr;
      check(hcf_features_load_csv(pmat_features.c_str(), pmat_spec.c_str(), &features));
      cleanup.own(features, hcf_features_free);
      hcf_pmat* pmat = nullptr;
      check(hcf_pmat_compute(model, features, &pmat));
      cleanup.own(pmat, hcf_pmat_free);
      check(hcf_pmat_save_csv(pmat, manifest.path("pmat.csv").string().c_str(),
                              pmat_threshold));
      std::cout << "probability matrix written (threshold " << pmat_threshold << ")\n";
      manifest.write();
    } else if (*sim) {
      Manifest manifest("simulate", sim_out);
      manifest.input("pmat", sim_pmat);
      manifest.flag("runs", sim_runs);
      manifest.seed(sim_seed);
      hcf_pmat* pmat = nullptr;
      check(hcf_pmat_load_csv(sim_pmat.c_str(), &pmat));
      cleanup.own(pmat, hcf_pmat_free);
      hcf_traces* traces = nullptr;
      if (!sim_seeds.empty()) {
        manifest.flag("seeds", sim_seeds);
        auto seeds = parse_id_list(sim_seeds);
        check(hcf_simulate(pmat, seeds.data(), static_cast<std::int64_t>(seeds.size()),
                           sim_runs, sim_seed, &traces));
      } else {
        manifest.flag("fail_prob", sim_fail_prob);
        check(hcf_simulate_random(pmat, sim_runs, sim_fail_prob, sim_seed, &traces));
      }
      cleanup.own(traces, hcf_traces_free);
      check(hcf_traces_save(traces, manifest.path("traces.jsonl").string().c_str()));
      double mean = 0.0;
      check(hcf_traces_mean_size(traces, &mean));
      std::cout << "simulated " << sim_runs << " rollouts, mean size " << mean << '\n';
      manifest.write();
    } else if (*eval) {
      if (eval_traces.empty() == eval_pmats.empty()) {
        std::cerr << "error: eval needs exactly one of --traces or --pmats\n";
        return HCF_ERR_USAGE;
      }
      Manifest manifest("eval", eval_out);
      json result;
      if (!eval_traces.empty()) {
        manifest.input("model_traces", eval_traces[0]);
        manifest.input("data_traces", eval_traces[1]);
        manifest.flag("top_frac", eval_top_frac);
        manifest.flag("include_initial", eval_include_initial);
        hcf_traces* a = nullptr;
        hcf_traces* b = nullptr;
        check(hcf_traces_load(eval_traces[0].c_str(), &a));
        cleanup.own(a, hcf_traces_free);
        check(hcf_traces_load(eval_traces[1].c_str(), &b));
        cleanup.own(b, hcf_traces_free);
        const int exclude_initial = eval_include_initial ? 0 : 1;
        double abs_all = 0.0, rel_all = 0.0, abs_top = 0.0, rel_top = 0.0;
        check(hcf_distribution_error(a, b, "absolute", 0.0, exclude_initial, &abs_all));
        check(hcf_distribution_error(a, b, "relative", 0.0, exclude_initial, &rel_all));
        result["distribution_error"] = {{"absolute", abs_all}, {"relative", rel_all}};
        if (eval_top_frac > 0.0) {
          check(hcf_distribution_error(a, b, "absolute", eval_top_frac, exclude_initial,
                                       &abs_top));
          check(hcf_distribution_error(a, b, "relative", eval_top_frac, exclude_initial,
                                       &rel_top));
          result["distribution_error_top"] = {{"fraction", eval_top_frac},
                                              {"absolute", abs_top},
                                              {"relative", rel_top}};
        }
      } else {
        manifest.input("model_pmat", eval_pmats[0]);
        manifest.input("reference_pmat", eval_pmats[1]);
        hcf_pmat* a = nullptr;
        hcf_pmat* b = nullptr;
        check(hcf_pmat_load_csv(eval_pmats[0].c_str(), &a));
        cleanup.own(a, hcf_pmat_free);
        check(hcf_pmat_load_csv(eval_pmats[1].c_str(), &b));
        cleanup.own(b, hcf_pmat_free);
        double abs_err = 0.0, rel_err = 0.0;
        check(hcf_probability_error(a, b, "absolute", &abs_err));
        check(hcf_probability_error(a, b, "relative", &rel_err));
        result["probability_error"] = {{"absolute", abs_err}, {"relative", rel_err}};
      }
      write_text(manifest.path("eval.json"), result.dump(2) + "\n");
      std::cout << result.dump(2) << '\n';
      manifest.write();
    } else if (*rank) {
      Manifest manifest("rank", rank_out);
      manifest.input("pmat", rank_pmat);
      manifest.flag("k", rank_k);
      manifest.flag("runs", rank_runs);
      manifest.seed(rank_seed);
      hcf_pmat* pmat = nullptr;
      check(hcf_pmat_load_csv(rank_pmat.c_str(), &pmat));
      cleanup.own(pmat, hcf_pmat_free);
      std::int64_t n = 0;
      check(hcf_pmat_node_count(pmat, &n));
      if (rank_k > n) {
        std::cerr << "error: k exceeds line count\n";
        return HCF_ERR_USAGE;
      }
      std::vector<std::int64_t> ids(static_cast<std::size_t>(rank_k));
      std::vector<double> marginals(static_cast<std::size_t>(rank_k));
      check(hcf_rank_celf(pmat, rank_k, rank_runs, rank_seed, ids.data(),
                          marginals.data()));
      std::ostringstream csv;
      csv << "rank,line_id,marginal_spread\n";
      for (std::size_t i = 0; i < ids.size(); ++i) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", marginals[i]);
        csv << (i + 1) << ',' << ids[i] << ',' << buf << '\n';
      }
      write_text(manifest.path("ranked.csv"), csv.str());
      std::cout << csv.str();
      manifest.write();
    } else if (*mit) {
      Manifest manifest("mitigate", mit_out);
      manifest.input("grid", mit_grid);
      manifest.input("ranked", mit_ranked);
      manifest.flag("top", mit_top);
      manifest.flag("runs", mit_runs);
      manifest.flag("fail_prob", mit_fail_prob);
      manifest.flag("alpha", mit_alpha);
      manifest.flag("bins", mit_bins);
      manifest.seed(mit_seed);
      hcf_grid* grid = nullptr;
      check(hcf_grid_load(mit_grid.c_str(), &grid));
      cleanup.own(grid, hcf_grid_free);
      auto ranked = read_ranked_lines(mit_ranked);
      if (ranked.empty()) {
        std::cerr << "error: ranked file lists no lines\n";
        return HCF_ERR_DATA;
      }
      if (mit_top < static_cast<std::int64_t>(ranked.size()))
        ranked.resize(static_cast<std::size_t>(mit_top));
      hcf_grid* reinforced = nullptr;
      check(hcf_grid_double_capacity(grid, ranked.data(),
                                     static_cast<std::int64_t>(ranked.size()),
                                     &reinforced));
      cleanup.own(reinforced, hcf_grid_free);
      check(hcf_grid_save(reinforced,
                          manifest.path("grid_mitigated.case.csv").string().c_str()));

      hcf_traces* before = nullptr;
      hcf_traces* after = nullptr;
      check(hcf_generate(grid, mit_runs, mit_fail_prob, mit_alpha, mit_seed, &before));
      cleanup.own(before, hcf_traces_free);
      check(hcf_generate(reinforced, mit_runs, mit_fail_prob, mit_alpha, mit_seed,
                         &after));
      cleanup.own(after, hcf_traces_free);
      check(hcf_traces_save(before,
                            manifest.path("traces_before.jsonl").string().c_str()));
      check(hcf_traces_save(after, manifest.path("traces_after.jsonl").string().c_str()));

      auto edges = parse_real_list(mit_bins);
      std::vector<double> masses_before(edges.size() - 1), masses_after(edges.size() - 1);
      check(hcf_size_histogram(before, edges.data(),
                               static_cast<std::int64_t>(edges.size()),
                               masses_before.data()));
      check(hcf_size_histogram(after, edges.data(),
                               static_cast<std::int64_t>(edges.size()),
                               masses_after.data()));
      write_text(manifest.path("hist_before.csv"), histogram_csv(edges, masses_before));
      write_text(manifest.path("hist_after.csv"), histogram_csv(edges, masses_after));

      double mean_before = 0.0, mean_after = 0.0;
      check(hcf_traces_mean_size(before, &mean_before));
      check(hcf_traces_mean_size(after, &mean_after));
      json summary;
      summary["reinforced_lines"] = ranked;
      summary["mean_size_before"] = mean_before;
      summary["mean_size_after"] = mean_after;
      summary["reduction"] =
          mean_before > 0.0 ? (mean_before - mean_after) / mean_before : 0.0;
      summary["histogram_before"] = histogram_json(edges, masses_before);
      summary["histogram_after"] = histogram_json(edges, masses_after);
      write_text(manifest.path("summary.json"), summary.dump(2) + "\n");
      std::cout << "mean cascade size " << mean_before << " -> " << mean_after << '\n';
      manifest.write();
    } else if (*theory) {
      json result;
      if (th_lines > 0) {
        double p = 0.0, lower = 0.0;
        check(hcf_covering_probability(th_lines, th_samples, &p, &lower));
        result["covering_probability"] = {{"lines", th_lines},
                                          {"samples", th_samples},
                                          {"exact", p},
                                          {"lower_bound", lower}};
      }
      double lip = 0.0, m = 0.0;
      check(hcf_lipschitz_bound(th_v, th_lambda, &lip));
      check(hcf_sample_complexity(th_eps, th_delta, th_d, th_v, th_lambda, th_bound, &m));
      result["lipschitz_bound"] = {{"V", th_v}, {"lambda", th_lambda}, {"value", lip}};
      result["sample_complexity"] = {{"eps", th_eps}, {"delta", th_delta}, {"d", th_d},
                                     {"V", th_v},     {"lambda", th_lambda},
                                     {"B", th_bound}, {"m", m}};
      std::cout << result.dump(2) << '\n';
      if (!th_out.empty()) {
        Manifest manifest("theory", th_out);
        manifest.flag("eps", th_eps);
        manifest.flag("delta", th_delta);
        write_text(manifest.path("theory.json"), result.dump(2) + "\n");
        manifest.write();
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return HCF_ERR_DATA;
  }
  return 0;
}
