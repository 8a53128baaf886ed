#pragma once

#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "features.hpp"
#include "samples.hpp"

namespace hcf {

/// Hyperparametric diffusion model: pairwise influence probabilities are
/// sigmoid(theta . x_uv), clamped into [lambda, 1 - lambda], with theta
/// confined to the box [-B, B]^d.
struct HcfModel {
  std::vector<double> theta;
  FeatureSpec spec;
  double lambda = 1e-9;  // precision floor, in (0, 0.5)
  double bound = 10.0;   // box half-width B

  std::size_t dim() const { return theta.size(); }
  void validate() const;
};

/// Pairwise line-to-line influence probabilities on the complete diffusion
/// graph. Entries produced by `probability_matrix` lie in [lambda, 1-lambda];
/// matrices loaded from a threshold-filtered export carry 0 for the dropped
/// pairs.
class ProbabilityMatrix {
 public:
  ProbabilityMatrix() = default;
  explicit ProbabilityMatrix(std::vector<LineId> nodes);

  const std::vector<LineId>& nodes() const { return nodes_; }
  std::size_t node_count() const { return nodes_.size(); }
  int node_index(LineId id) const;

  double at(LineId u, LineId v) const;
  double at_index(int ui, int vi) const { return p_[idx(ui, vi)]; }
  void set_index(int ui, int vi, double p) { p_[idx(ui, vi)] = p; }
  void set(LineId u, LineId v, double p);

  std::string to_csv(double threshold = 0.0) const;
  static ProbabilityMatrix from_csv(const std::string& csv);

 private:
  std::size_t idx(int ui, int vi) const {
    return static_cast<std::size_t>(ui) * nodes_.size() + static_cast<std::size_t>(vi);
  }
  std::vector<LineId> nodes_;  // sorted
  std::vector<double> p_;
};

// sigmoid(theta . x) clamped into [lambda, 1-lambda].
double influence_probability(const HcfModel& model, std::span<const double> x);

// Entrywise influence probability over every ordered pair of the feature
// matrix.
ProbabilityMatrix probability_matrix(const HcfModel& model, const FeatureMatrix& features);

// P(theta | x, s) = 1 - prod_{u in activators} (1 - p_{u,target}), clamped
// into [lambda, 1 - lambda^{|activators|}].
double activation_probability(const HcfModel& model, const FeatureMatrix& features,
                              const std::vector<LineId>& activators, LineId target);

// Multiplicity-weighted mean cross-entropy over the sample set (Monte Carlo
// estimate of the expected log-likelihood).
double log_likelihood(const HcfModel& model, const FeatureMatrix& features,
                      const SampleSet& samples);

// Exact analytic gradient of `log_likelihood` in theta. Samples whose
// probability sits on a clamp contribute zero (the clamp is a constant).
std::vector<double> gradient(const HcfModel& model, const FeatureMatrix& features,
                             const SampleSet& samples);

/// Pre-indexed likelihood evaluator for the optimizer: resolves sample
/// targets against the feature matrix once, then evaluates value+gradient
/// repeatedly. Evaluation parallelizes over fixed-size sample chunks reduced
/// in chunk order, so results are bit-identical for any thread count.
class LikelihoodProblem {
 public:
  LikelihoodProblem(const FeatureMatrix& features, const SampleSet& samples,
                    double lambda);

  std::size_t dim() const { return dim_; }
  double value(std::span<const double> theta) const;
  double value_and_gradient(std::span<const double> theta, std::span<double> grad) const;

  // Positive-sample probabilities at theta, keyed by sample index; used by
  // the concavity diagnostic.
  std::vector<double> positive_probabilities(std::span<const double> theta) const;

 private:
  struct Entry {
    std::uint32_t pair_slot;  // index into used pair list
  };
  double sample_value(std::span<const double> p_used, std::size_t s, double* coef,
                      double* q_out) const;

  const FeatureMatrix& features_;
  const SampleSet& samples_;
  double lambda_;
  std::size_t dim_;
  std::vector<std::uint32_t> pair_of_entry_;  // flattened activator->pair slots
  std::vector<std::size_t> sample_begin_;     // offsets into pair_of_entry_
  std::vector<std::size_t> used_pair_offsets_;  // slot -> (ui * n + vi)
};

struct ConcavityReport {
  bool guaranteed_concave = false;
  double max_phi = 0.0;             // over pairs covered by positive samples
  std::size_t covered_pairs = 0;    // |C+|
  std::size_t positive_phi = 0;     // count of phi_uv > 0
  std::vector<std::tuple<LineId, LineId, double>> phi;  // per covered pair
};

// Executable sufficient condition for concavity of the expected
// log-likelihood at the model's current theta: phi_uv <= 0 for every pair
// covered by a positive sample. Sufficient only, hence "not guaranteed"
// rather than "non-concave" when it fails.
ConcavityReport check_concavity(const HcfModel& model, const FeatureMatrix& features,
                                const SampleSet& samples);

// Lipschitz constant of the per-sample log-likelihood w.r.t. the sup norm:
// V * log(1/lambda), V = max activator-set size.
double lipschitz_bound(std::size_t max_activators, double lambda);
double lipschitz_bound(const SampleSet& samples, double lambda);

// Sample count sufficient for the MLE to be epsilon-optimal with probability
// 1-delta: (6 V log(1/lambda) / eps)^2 *
// (4 d log(ceil(3 B V log(1/lambda) / eps)) + 25 log(8/delta)), rounded up.
double sample_complexity_bound(double epsilon, double delta, std::size_t dim,
                               std::size_t max_activators, double lambda, double bound);

std::string model_to_json(const HcfModel& model);
HcfModel model_from_json(const std::string& text);
void save_model(const HcfModel& model, const std::string& path);
HcfModel load_model(const std::string& path);

}  // namespace hcf
