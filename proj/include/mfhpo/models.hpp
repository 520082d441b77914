#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfhpo/matrix.hpp"
#include "mfhpo/space.hpp"

namespace mfhpo {

class ModelFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Prediction {
  double mean = 0.0;
  double sd = 0.0;
};

// Encoded inputs and raw targets. The models scale targets themselves.
struct EncodedDataset {
  Matrix x;
  Matrix y;

  std::size_t size() const { return x.rows; }
};

EncodedDataset make_dataset(const Encoder& encoder, std::span<const Configuration> configs,
                            const Matrix& targets);
EncodedDataset subset(const EncodedDataset& data, std::span<const std::size_t> rows);

// ---------------------------------------------------------------------------
// Target scaling to the unit interval.

enum class TargetTransform { identity, log, neg_exp };

class TargetScaler {
 public:
  TargetScaler() = default;
  static TargetScaler fit(const Matrix& y, std::vector<TargetTransform> transforms, bool clamp);

  std::size_t targets() const { return transforms_.size(); }
  double scale(std::size_t target, double y) const;
  double unscale(std::size_t target, double scaled) const;
  double raw_min(std::size_t target) const { return raw_min_[target]; }
  double raw_max(std::size_t target) const { return raw_max_[target]; }
  bool clamps() const { return clamp_; }
  std::span<const TargetTransform> transforms() const { return transforms_; }

  // Flat state for persistence: per target {transform, shift, lo, hi, raw_min, raw_max}.
  std::vector<double> state() const;
  static TargetScaler from_state(std::span<const double> state, bool clamp);

 private:
  double forward(std::size_t target, double y) const;
  double inverse(std::size_t target, double t) const;

  std::vector<TargetTransform> transforms_;
  std::vector<double> shift_;
  std::vector<double> lo_;
  std::vector<double> hi_;
  std::vector<double> raw_min_;
  std::vector<double> raw_max_;
  bool clamp_ = false;
};

// ---------------------------------------------------------------------------
// Gaussian process with an ARD Matern-3/2 kernel.

struct GPConfig {
  std::size_t restarts = 3;
  std::size_t max_evals_per_start = 300;
  double noise_floor = 1e-6;
  double jitter_start = 1e-8;
  double jitter_max = 1e-2;
  double log_lengthscale_min = -5.0;
  double log_lengthscale_max = 5.0;
  std::uint64_t seed = 0;
};

class GPModel {
 public:
  Prediction predict(std::span<const double> x) const;
  // Log marginal likelihood of the standardized targets at log-hyperparameters
  // theta = (log l_1..log l_p, log signal variance, log noise variance).
  double log_marginal_likelihood(std::span<const double> theta) const;

  std::span<const double> theta() const { return theta_; }
  double signal_variance() const;
  double noise_variance() const;
  double fitted_lml() const { return fitted_lml_; }
  // Likelihood at each multi-start initial point.
  std::span<const double> start_lml() const { return start_lml_; }
  double target_scale() const { return y_sd_; }

 private:
  friend GPModel fit_gp(const Matrix& x, std::span<const double> y, const GPConfig& cfg);

  Matrix x_;
  std::vector<double> y_;  // standardized
  double y_mean_ = 0.0;
  double y_sd_ = 1.0;
  std::vector<double> theta_;
  std::vector<double> inv_ls2_;
  Matrix chol_;  // lower factor of K + noise I
  std::vector<double> alpha_;
  double fitted_lml_ = 0.0;
  std::vector<double> start_lml_;
  GPConfig cfg_;
};

// Throws ModelFitError if the covariance cannot be factorized with jitter up to
// cfg.jitter_max.
GPModel fit_gp(const Matrix& x, std::span<const double> y, const GPConfig& cfg = {});
Prediction gp_predict(const GPModel& model, std::span<const double> x);

// ---------------------------------------------------------------------------
// Random forest regression.

struct RFConfig {
  std::size_t n_trees = 50;
  bool bootstrap = true;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  // Fraction of features tried per split (at least one).
  double max_features = 5.0 / 6.0;
  std::size_t max_depth = 0;  // 0 = unlimited
  std::uint64_t seed = 0;
};

class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };

  double predict(std::span<const double> x) const;
  std::span<const Node> nodes() const { return nodes_; }
  std::size_t depth() const;

 private:
  friend class TreeBuilder;
  std::vector<Node> nodes_;
};

class RFModel {
 public:
  Prediction predict(std::span<const double> x) const;
  std::vector<double> tree_predictions(std::span<const double> x) const;
  std::span<const RegressionTree> trees() const { return trees_; }
  std::span<const std::vector<std::size_t>> bootstrap_indices() const { return bootstrap_; }

 private:
  friend RFModel fit_rf(const Matrix& x, std::span<const double> y, const RFConfig& cfg);
  std::vector<RegressionTree> trees_;
  std::vector<std::vector<std::size_t>> bootstrap_;
};

RFModel fit_rf(const Matrix& x, std::span<const double> y, const RFConfig& cfg = {});
Prediction rf_predict(const RFModel& model, std::span<const double> x);

// ---------------------------------------------------------------------------
// Feed-forward network ensembles.

struct MLPConfig {
  std::size_t hidden = 64;
  std::size_t members = 5;
  std::size_t max_epochs = 200;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  std::size_t patience = 20;
  double validation_fraction = 0.2;
  std::size_t min_samples = 50;
  std::vector<TargetTransform> transforms;  // empty = identity for every target
  bool clamp = true;
};

// Two hidden SiLU layers and a linear output layer. Parameters live in one flat
// vector: W1, b1, W2, b2, W3, b3.
class MLPNetwork {
 public:
  MLPNetwork() = default;
  MLPNetwork(std::size_t inputs, std::size_t hidden, std::size_t outputs);

  std::size_t inputs() const { return inputs_; }
  std::size_t hidden() const { return hidden_; }
  std::size_t outputs() const { return outputs_; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  void initialize(Rng& rng);
  void forward(std::span<const double> x, std::span<double> out) const;
  // Mean squared error over rows of the batch and outputs; accumulates the
  // gradient into `grad` (resized and zeroed first) and returns the loss.
  double loss_and_gradient(const Matrix& x, const Matrix& y, std::span<const std::size_t> rows,
                           std::vector<double>& grad) const;
  double loss(const Matrix& x, const Matrix& y, std::span<const std::size_t> rows) const;

 private:
  std::size_t inputs_ = 0;
  std::size_t hidden_ = 0;
  std::size_t outputs_ = 0;
  std::vector<double> params_;
};

enum class EnsembleMode { mean, dirichlet };

class MLPEnsemble {
 public:
  std::size_t members() const { return members_.size(); }
  std::size_t outputs() const { return scaler_.targets(); }
  const TargetScaler& scaler() const { return scaler_; }
  std::span<const double> weights() const { return alpha_; }
  std::span<const MLPNetwork> networks() const { return members_; }

  // Unscaled (and clamped when configured) predictions.
  std::vector<double> predict(std::span<const double> x, EnsembleMode mode = EnsembleMode::mean) const;
  // Per-member unscaled predictions, members x outputs.
  Matrix member_predictions(std::span<const double> x) const;
  // Mean and across-member standard deviation of one target.
  Prediction predict_with_spread(std::span<const double> x, std::size_t target = 0) const;

  // Redraws the Dirichlet(1,..,1) mixture weights.
  void draw_weights(std::uint64_t seed);

  static MLPEnsemble from_parts(std::vector<MLPNetwork> members, std::vector<double> alpha,
                                TargetScaler scaler);

 private:
  friend MLPEnsemble fit_mlp_ensemble(const EncodedDataset& data, const MLPConfig& cfg,
                                      std::uint64_t seed);
  std::vector<MLPNetwork> members_;
  std::vector<double> alpha_;
  TargetScaler scaler_;
};

std::vector<double> dirichlet_weights(std::size_t k, std::uint64_t seed);

// Throws ModelFitError on a non-finite training loss or too few samples.
MLPEnsemble fit_mlp_ensemble(const EncodedDataset& data, const MLPConfig& cfg, std::uint64_t seed);
std::vector<double> ensemble_predict(const MLPEnsemble& model, std::span<const double> x,
                                     EnsembleMode mode = EnsembleMode::mean);

// ---------------------------------------------------------------------------

// Fractional ranks (ties get the average rank), 1-based.
std::vector<double> fractional_ranks(std::span<const double> values);
// Spearman correlation; nullopt when either rank vector has zero variance.
std::optional<double> spearman_rho(std::span<const double> pred, std::span<const double> truth);

}  // namespace mfhpo
