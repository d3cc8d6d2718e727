#pragma once

#include "mvgcca/matrix.hpp"
#include "mvgcca/nn.hpp"
#include "mvgcca/objectives.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace mvgcca {

/// Rows are the shared-factor realizations of the training samples.
/// Invariants: g^T g = M I_F and zero column means.
struct SharedTarget {
  Matrix g;
  bool degenerate = false;  // the summed encodings had rank < F
};

/// Closed-form target update: g = sqrt(M) U V^T from the SVD of the
/// column-centered sum of encodings. The returned transform reproduces the
/// update as g = (Y - mean) * transform, which lets the same map be applied
/// to held-out rows.
struct ProcrustesUpdate {
  SharedTarget target;
  RowVector mean;
  Matrix transform;
};

ProcrustesUpdate procrustes_update(const Matrix& summed_encodings);
SharedTarget update_shared_target(std::span<const Matrix> encodings);

/// Max-abs deviation of g^T g / M from identity, and max-abs column mean.
struct TargetDiagnostics {
  double gram_error = 0.0;
  double mean_error = 0.0;
};
TargetDiagnostics check_target(const Matrix& g);

enum class ValidationTarget {
  split_local,  // Procrustes target recomputed on validation encodings
  shared,       // training Procrustes transform applied to validation encodings
};

struct TrainConfig {
  Method method = Method::proposed;
  double lambda = 0.1;
  int outer_iterations = 40;
  double learning_rate = 1e-3;
  double weight_decay = 1e-3;
  int batch_size = 100;
  int latent_dim = 4;
  int hidden_width = 32;
  int hidden_layers = 3;
  bool activate_last_hidden = false;
  bool normalize_r = false;
  InitScheme init = InitScheme::fan_in_uniform;
  ValidationTarget validation_target = ValidationTarget::split_local;
  std::uint64_t seed = 0;

  void validate(Eigen::Index train_rows) const;
};

struct IterationRecord {
  int iteration = 0;
  double train_objective = 0.0;
  double train_r = 0.0;
  double train_reconstruction = 0.0;
  double validation_objective = 0.0;
  double validation_r = 0.0;
  double validation_reconstruction = 0.0;
  TargetDiagnostics target;  // of the training target used in this iteration
  double seconds = 0.0;
};

struct TrainedModel {
  Method method = Method::proposed;
  double lambda = 0.0;
  std::vector<Mlp> encoders;  // best-validation snapshot
  std::vector<Mlp> decoders;
  std::vector<double> normalizers;
  double best_validation_objective = 0.0;
  int best_iteration = 0;
  std::vector<IterationRecord> history;
};

using IterationObserver = std::function<void(const IterationRecord&)>;

/// Alternates the closed-form shared-target update with one epoch of
/// minibatch AdamW updates of every encoder/decoder, keeping the snapshot
/// with the lowest validation objective. Linear methods (linear-cca, maxvar)
/// are fitted in closed form and returned as one-layer encoders.
TrainedModel train(std::span<const Matrix> train_views, std::span<const Matrix> validation_views,
                   const TrainConfig& config, const IterationObserver& observer = {});

/// Encodes every view with its encoder.
std::vector<Matrix> encode_views(std::span<const Mlp> encoders, std::span<const Matrix> views);

/// Composite objective of a model on a full split, with the split-local
/// (or supplied) target.
LossBreakdown split_objective(const TrainedModel& model, std::span<const Matrix> views,
                              const TrainConfig& config);

/// Dominant-term operation counts of one outer iteration: the SVD-based
/// target update O(M F^2) and one batch update O(|B| sum_k d_k).
struct IterationCost {
  double target_update = 0.0;
  double network_update = 0.0;
  double total = 0.0;
};
IterationCost per_iteration_cost(double m, double f, double batch,
                                 std::span<const std::size_t> param_counts);

}  // namespace mvgcca
