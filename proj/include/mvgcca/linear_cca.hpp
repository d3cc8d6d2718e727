#pragma once

#include "mvgcca/matrix.hpp"
#include "mvgcca/nn.hpp"

#include <optional>
#include <span>
#include <vector>

namespace mvgcca {

/// Linear maps Q_k (D_k x F) fitted on centered views, together with the
/// training-row shared target g (M x F, g^T g = M I, centered columns).
struct LinearProjections {
  std::vector<Matrix> q;
  std::vector<RowVector> means;   // per-view training means removed before projecting
  Matrix g;
  Vector canonical_correlations;  // two-view case: F values in [0, 1], descending
  Vector eigenvalues;             // MAX-VAR: top-F eigenvalues of sum_k P_k

  /// (x - mean_k) * Q_k
  Matrix project(std::size_t view, const Matrix& x) const;
  /// The same affine map as a one-layer network, so linear models can be
  /// evaluated and checkpointed like deep encoders.
  Mlp as_encoder(std::size_t view) const;
};

/// Default ridge: 1e-8 * trace(cov) / D with cov = X^T X / M of the centered view.
double default_ridge(const Matrix& centered_view);

/// Two-view linear CCA. Covariances are normalized by M and regularized by
/// ridge * I (default_ridge per view when ridge is empty). An explicit ridge of
/// zero on a singular covariance throws IllConditioned.
LinearProjections cca_two_view(const Matrix& x1, const Matrix& x2, int f,
                               std::optional<double> ridge = std::nullopt);

/// MAX-VAR GCCA: g = sqrt(M) * top-F eigenvectors of sum_k X_k (X_k^T X_k + M r I)^{-1} X_k^T
/// and Q_k the ridge least-squares map from X_k onto g.
LinearProjections maxvar_gcca(std::span<const Matrix> views, int f,
                              std::optional<double> ridge = std::nullopt);

/// Residual sum_k ||X_k Q_k - g||_F^2 / M of a fitted MAX-VAR model.
double maxvar_objective(std::span<const Matrix> views, const LinearProjections& fit);

struct CanonicalCorrelations {
  Vector values;             // descending, in [0, 1]
  bool regularized = false;  // a rank-deficient input needed the 1e-10 ridge
};

/// Cosines of the canonical (principal) angles between the centered column
/// spaces of z1 and z2.
CanonicalCorrelations canonical_corrs(const Matrix& z1, const Matrix& z2);

/// Mean over all view pairs of the mean canonical cosine.
double total_corr_coef(std::span<const Matrix> embeddings);

}  // namespace mvgcca
