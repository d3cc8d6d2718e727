#pragma once

#include "mvgcca/matrix.hpp"
#include "mvgcca/nn.hpp"

#include <span>
#include <string>
#include <vector>

namespace mvgcca {

enum class Method { linear_cca, maxvar, dgcca, dccae, proposed };

std::string to_string(Method method);
/// Accepts the kebab-case names used on the command line.
Method parse_method(const std::string& name);
bool is_deep(Method method);
/// Methods whose objective has a lambda trade-off.
bool uses_lambda(Method method);
/// Deep methods that train decoders.
bool has_decoders(Method method);

struct ObjectiveSpec {
  Method method = Method::proposed;
  double lambda = 0.1;
  std::vector<double> normalizers;  // n_k, training mean squared row norm of view k
  bool normalize_r = false;         // divide R by F (the target's mean squared norm)

  void validate(std::size_t views) const;
};

/// Per-view training normalizers n_k.
std::vector<double> view_normalizers(std::span<const Matrix> views);

struct TermResult {
  double value = 0.0;
  std::vector<Matrix> grads;  // one per encoding
};

/// (1/B) sum_k ||f_k - g||_F^2 and its gradients (2/B)(f_k - g).
TermResult r_term(std::span<const Matrix> encodings, const Matrix& g);

struct ReconstructionTerm {
  double value = 0.0;
  std::vector<Matrix> encoding_grads;  // gradient w.r.t. each f_k(x^(k))
  std::vector<MlpGrads> decoder_grads;
};

/// Self reconstruction (1/B) sum_k ||x^(k) - w_k(f_k)||^2 / n_k.
ReconstructionTerm l_term(std::span<const Matrix> views, std::span<const Matrix> encodings,
                          std::span<const Mlp> decoders, std::span<const double> normalizers,
                          bool want_grads = true);

/// Cross reconstruction (1/(B(K-1))) sum_k sum_{j != k} ||w_k(f_j) - x^(k)||^2 / n_k.
/// View k never reconstructs itself.
ReconstructionTerm q_term(std::span<const Matrix> views, std::span<const Matrix> encodings,
                          std::span<const Mlp> decoders, std::span<const double> normalizers,
                          bool want_grads = true);

struct LossBreakdown {
  double r = 0.0;
  double l = 0.0;
  double q = 0.0;
  double total = 0.0;
  /// The reconstruction term that enters the total (l for dccae, q for proposed).
  double reconstruction(Method method) const { return method == Method::dccae ? l : q; }
};

/// dgcca: r; dccae: (1-lambda) r + lambda l; proposed: (1-lambda) r + lambda q.
LossBreakdown compose(const ObjectiveSpec& spec, double r, double l, double q);

struct ObjectiveResult {
  LossBreakdown loss;
  std::vector<MlpGrads> encoder_grads;
  std::vector<MlpGrads> decoder_grads;
};

/// Full forward/backward of the composite objective on one batch.
ObjectiveResult evaluate_objective(const ObjectiveSpec& spec, std::span<const Matrix> views,
                                   std::span<const Mlp> encoders, std::span<const Mlp> decoders,
                                   const Matrix& g, bool want_grads = true);

}  // namespace mvgcca
