#pragma once

#include "mvgcca/matrix.hpp"
#include "mvgcca/nn.hpp"

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace mvgcca {

/// Configuration of the categorical-common-factor benchmark: a one-hot common
/// factor g, label-conditioned Gaussian-mixture private factors c^(k) and one
/// random ReLU generator network per view.
struct SynthConfig {
  std::vector<double> class_probabilities{0.1, 0.2, 0.3, 0.4};
  int views = 2;
  std::vector<int> private_dims{4, 4};
  std::vector<int> view_dims{64, 64};
  int generator_hidden_width = 32;
  int generator_hidden_layers = 3;
  /// false: ReLU after the first two of three hidden layers only.
  bool generator_activate_last_hidden = false;
  /// Common-to-private power ratio in dB; +infinity disables the private part.
  double power_ratio_db = -18.0;
  /// Measure the common power as the variance of g (E||g - E g||^2) instead
  /// of its raw second moment E||g||^2.
  bool centered_common_power = false;
  /// Scale of label-dependent private means (0 gives zero-mean components).
  double private_mean_scale = 0.0;
  double covariance_jitter = 0.1;
  /// Standardize every view feature with training-split statistics.
  bool standardize = true;
  int train_size = 3000;
  int validation_size = 1500;
  int test_size = 1500;
  std::uint64_t seed = 0;

  int classes() const { return static_cast<int>(class_probabilities.size()); }
  int total_size() const { return train_size + validation_size + test_size; }
  void validate() const;
};

/// Per-(view, class) Gaussian parameters of the private factors.
struct PrivateMixture {
  // components[k][z]: mean and Cholesky factor of the class-z covariance of view k
  struct Component {
    Vector mean;
    Matrix covariance;
    Matrix cholesky;
  };
  std::vector<std::vector<Component>> components;
};

struct Latents {
  Labels labels;
  Matrix g;               // M x F one-hot
  std::vector<Matrix> c;  // K matrices M x L_k
};

struct LabeledMultiviewDataset {
  std::vector<Matrix> views;
  Labels labels;
  Matrix latent_g;
  std::vector<Matrix> latent_c;

  Eigen::Index rows() const { return static_cast<Eigen::Index>(labels.size()); }
};

struct SyntheticSplits {
  LabeledMultiviewDataset train;
  LabeledMultiviewDataset validation;
  LabeledMultiviewDataset test;
  std::vector<Mlp> generators;
  PrivateMixture mixture;
};

/// Draws covariances A A^T + jitter I (A standard normal, fresh per view and class).
PrivateMixture draw_mixture(const SynthConfig& config, std::mt19937_64& rng);

/// Samples labels, one-hot g and the private factors; c^(k) is drawn from the
/// component selected by the label, independently across views.
Latents sample_latents(const SynthConfig& config, const PrivateMixture& mixture, int count,
                       std::mt19937_64& rng);
/// Convenience overload: fresh mixture and config.total_size() samples.
Latents sample_latents(const SynthConfig& config, std::mt19937_64& rng);

/// Rescales every c^(k) so that power(g) / power(c^(k)) = 10^(ratio_db / 10).
/// g is untouched. A ratio of +infinity zeroes the private factors.
void apply_power_ratio(const Matrix& g, std::vector<Matrix>& c, double ratio_db,
                       bool centered_common_power = false);

/// Ratio power(g) / power(c) in dB, using the same power estimator.
double measured_power_ratio_db(const Matrix& g, const Matrix& c, bool centered_common_power);

SyntheticSplits generate(const SynthConfig& config);

/// CSV export: <split>_view<k>.csv, <split>_labels.csv, generator checkpoints
/// and manifest.json with the full configuration.
void write_dataset(const SyntheticSplits& splits, const SynthConfig& config,
                   const std::string& directory);
/// Loads views and labels written by write_dataset (latents are not reloaded).
SyntheticSplits read_dataset(const std::string& directory, SynthConfig* config = nullptr);

}  // namespace mvgcca
