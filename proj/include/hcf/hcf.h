/*
 * hcf - hyperparametric cascading-failure diffusion models for power grids.
 *
 * C API of the shared library. All objects are opaque handles created and
 * released by the library; every fallible call returns a status code
 * (HCF_OK on success) and leaves a human-readable message in
 * hcf_last_error() on failure. Handles are immutable once created and safe
 * to share across threads.
 */
#ifndef HCF_H
#define HCF_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define HCF_OK 0
#define HCF_ERR_USAGE 1   /* bad arguments / misuse of the interface */
#define HCF_ERR_DATA 2    /* malformed or inconsistent input data */
#define HCF_ERR_NUMERIC 3 /* numerical failure */

typedef struct hcf_grid hcf_grid;         /* physical grid case */
typedef struct hcf_traces hcf_traces;     /* list of cascade traces */
typedef struct hcf_features hcf_features; /* pairwise feature matrix + spec */
typedef struct hcf_model hcf_model;       /* trained hyperparametric model */
typedef struct hcf_pmat hcf_pmat;         /* pairwise influence probabilities */

const char* hcf_version(void);

/* Message for the most recent failure on this thread. */
const char* hcf_last_error(void);

/* Worker threads used by parallel sections; n <= 0 resets to the
 * HCF_THREADS environment variable / hardware default. */
void hcf_set_threads(int n);
int hcf_threads(void);

void hcf_string_free(char* s);

/* ---- grid ---- */

/* Format by extension: ".m" parses the MATPOWER subset, anything else the
 * sectioned case CSV. */
int hcf_grid_load(const char* path, hcf_grid** out);
/* format: "csv" or "matpower". */
int hcf_grid_parse(const char* text, const char* format, hcf_grid** out);
/* Canonical case-CSV serialization. */
int hcf_grid_save(const hcf_grid* grid, const char* path);
int hcf_grid_counts(const hcf_grid* grid, int64_t* n_buses, int64_t* n_lines);
/* surplus = total generation - total demand; balanced = |surplus| <= 1e-6. */
int hcf_grid_balance(const hcf_grid* grid, double* surplus, int* balanced);
/* Fills up to cap in-service line ids; returns the total count in *n. */
int hcf_grid_line_ids(const hcf_grid* grid, int64_t* ids, int64_t cap, int64_t* n);
int hcf_grid_double_capacity(const hcf_grid* grid, const int64_t* line_ids, int64_t n,
                             hcf_grid** out);
int hcf_grid_scale_demand(const hcf_grid* grid, double factor, int scale_generation,
                          hcf_grid** out);
void hcf_grid_free(hcf_grid* grid);

/* ---- cascade generation and trace files (JSON Lines) ---- */

/* DC overload cascades: per run every in-service line fails independently
 * with fail_prob (redrawn until non-empty), then the cascade rolls out with
 * overload tolerance alpha. Deterministic in seed. */
int hcf_generate(const hcf_grid* grid, int64_t runs, double fail_prob, double alpha,
                 uint64_t seed, hcf_traces** out);
int hcf_traces_load(const char* path, hcf_traces** out);
int hcf_traces_save(const hcf_traces* traces, const char* path);
int hcf_traces_count(const hcf_traces* traces, int64_t* n);
int hcf_traces_mean_size(const hcf_traces* traces, double* mean);
void hcf_traces_free(hcf_traces* traces);

/* ---- features ---- */

/* Extracts per-line physical/topological features from the intact-grid power
 * flow and assembles normalized pairwise vectors. Fits fresh normalization
 * bounds; pass the returned spec JSON to _frozen to reuse them on another
 * grid instance (values are clamped into [-1, 1]). */
int hcf_features_extract(const hcf_grid* grid, hcf_features** out);
int hcf_features_extract_frozen(const hcf_grid* grid, const char* spec_json,
                                hcf_features** out);
int hcf_features_dim(const hcf_features* features, int64_t* d);
/* Caller frees with hcf_string_free. */
int hcf_features_spec_json(const hcf_features* features, char** out_json);
int hcf_features_save_csv(const hcf_features* features, const char* path);
int hcf_features_load_csv(const char* csv_path, const char* spec_json_path,
                          hcf_features** out);
void hcf_features_free(hcf_features* features);

/* ---- training ---- */

typedef struct hcf_train_options {
  double lambda;    /* probability precision floor, default 1e-9 */
  double bound;     /* hypothesis box half-width B, default 10 */
  int memory;       /* L-BFGS history, default 10 */
  int max_iters;    /* default 500 */
  double grad_tol;  /* default 1e-6 */
  double f_tol;     /* default 1e-10 */
  int restarts;     /* extra random starts, default 3 */
  uint64_t seed;
} hcf_train_options;

void hcf_train_options_init(hcf_train_options* options);

/* Encodes the traces into aggregated samples, maximizes the expected
 * log-likelihood and returns the trained model. report_json (optional)
 * receives convergence plus concavity/Lipschitz diagnostics; free it with
 * hcf_string_free. */
int hcf_train(const hcf_traces* traces, const hcf_features* features,
              const hcf_train_options* options, hcf_model** out_model,
              char** report_json);

/* Audit dump of the aggregated positive/negative samples a trace set encodes
 * to, as CSV rows (activators joined by '|', target, label, multiplicity).
 * The universe is the feature matrix's node set. */
int hcf_samples_dump_csv(const hcf_traces* traces, const hcf_features* features,
                         const char* path);

int hcf_model_load(const char* path, hcf_model** out);
int hcf_model_save(const hcf_model* model, const char* path);
void hcf_model_free(hcf_model* model);

/* ---- probability matrix ---- */

int hcf_pmat_compute(const hcf_model* model, const hcf_features* features,
                     hcf_pmat** out);
/* Writes "u,v,p" triplets; pairs with p < threshold are dropped. */
int hcf_pmat_save_csv(const hcf_pmat* pmat, const char* path, double threshold);
int hcf_pmat_load_csv(const char* path, hcf_pmat** out);
int hcf_pmat_node_count(const hcf_pmat* pmat, int64_t* n);
void hcf_pmat_free(hcf_pmat* pmat);

/* ---- diffusion prediction ---- */

/* Independent-cascade rollouts from a fixed seed set. */
int hcf_simulate(const hcf_pmat* pmat, const int64_t* seed_lines, int64_t n_seeds,
                 int64_t runs, uint64_t seed, hcf_traces** out);
/* Rollouts with Bernoulli(fail_prob) initial failures, redrawn until
 * non-empty. */
int hcf_simulate_random(const hcf_pmat* pmat, int64_t runs, double fail_prob,
                        uint64_t seed, hcf_traces** out);
int hcf_spread_estimate(const hcf_pmat* pmat, const int64_t* seed_lines, int64_t n_seeds,
                        int64_t runs, uint64_t seed, double* mean, double* std_error);
/* Exact expected spread; instances above 20 nodes are rejected. */
int hcf_spread_exact(const hcf_pmat* pmat, const int64_t* seed_lines, int64_t n_seeds,
                     double* spread);
/* CELF lazy-greedy top-k by Monte Carlo spread; fills out_ids[k] and
 * out_marginals[k] (marginals optional). */
int hcf_rank_celf(const hcf_pmat* pmat, int64_t k, int64_t runs, uint64_t seed,
                  int64_t* out_ids, double* out_marginals);

/* ---- evaluation metrics ---- */

/* Distribution error between per-line expected failure counts of two trace
 * sets over their combined line universe. mode: "absolute" or "relative";
 * top_fraction <= 0 evaluates all lines. */
int hcf_distribution_error(const hcf_traces* a, const hcf_traces* b, const char* mode,
                           double top_fraction, int exclude_initial, double* out);
int hcf_probability_error(const hcf_pmat* a, const hcf_pmat* b, const char* mode,
                          double* out);
/* masses[i] receives the probability mass of bin [edges[i], edges[i+1]). */
int hcf_size_histogram(const hcf_traces* traces, const double* edges, int64_t n_edges,
                       double* masses);

/* ---- theory utilities ---- */

/* Probability that n_samples uniform draws cover all n_lines lines, plus the
 * closed-form lower bound 1 - V exp(-S/V). */
int hcf_covering_probability(int64_t n_lines, int64_t n_samples, double* p_cover,
                             double* lower_bound);
/* Sup-norm Lipschitz constant of the per-sample log-likelihood:
 * V log(1/lambda). */
int hcf_lipschitz_bound(int64_t max_activators, double lambda, double* out);
/* Samples sufficient for an epsilon-optimal MLE with confidence 1-delta. */
int hcf_sample_complexity(double epsilon, double delta, int64_t dim,
                          int64_t max_activators, double lambda, double bound,
                          double* out_m);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* HCF_H */
