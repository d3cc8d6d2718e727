#include "mvgcca/objectives.hpp"

#include <cmath>

namespace mvgcca {

std::string to_string(Method method) {
  switch (method) {
    case Method::linear_cca: return "linear-cca";
    case Method::maxvar: return "maxvar";
    case Method::dgcca: return "dgcca";
    case Method::dccae: return "dccae";
    case Method::proposed: return "proposed";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::linear_cca, Method::maxvar, Method::dgcca, Method::dccae,
                   Method::proposed}) {
    if (to_string(m) == name) return m;
  }
  throw InvalidInput("unknown method '" + name + "'");
}

bool is_deep(Method method) {
  return method == Method::dgcca || method == Method::dccae || method == Method::proposed;
}

bool uses_lambda(Method method) { return method == Method::dccae || method == Method::proposed; }

bool has_decoders(Method method) { return uses_lambda(method); }

void ObjectiveSpec::validate(std::size_t views) const {
  require(is_deep(method), "ObjectiveSpec: method has no trainable objective");
  require(lambda >= 0.0 && lambda <= 1.0, "ObjectiveSpec: lambda must be in [0, 1]");
  if (has_decoders(method)) {
    require(normalizers.size() == views, "ObjectiveSpec: one normalizer per view required");
    for (double n : normalizers) require(n > 0.0, "ObjectiveSpec: normalizers must be positive");
  }
  if (method == Method::proposed) require(views >= 2, "ObjectiveSpec: proposed needs K >= 2");
}

std::vector<double> view_normalizers(std::span<const Matrix> views) {
  std::vector<double> out;
  for (const Matrix& v : views) {
    const double n = mean_squared_norm(v);
    require(n > 0.0, "view_normalizers: view has zero power");
    out.push_back(n);
  }
  return out;
}

TermResult r_term(std::span<const Matrix> encodings, const Matrix& g) {
  TermResult out;
  const double batch = static_cast<double>(g.rows());
  for (const Matrix& f : encodings) {
    require(f.rows() == g.rows() && f.cols() == g.cols(), "r_term: shape mismatch");
    Matrix diff = f - g;
    out.value += diff.squaredNorm() / batch;
    out.grads.push_back((2.0 / batch) * diff);
  }
  return out;
}

namespace {

// Adds (scale)*||w(z) - x||^2 to the term and backpropagates through w.
void accumulate_reconstruction(ReconstructionTerm& term, const Matrix& x, const Matrix& z,
                               const Mlp& decoder, std::size_t decoder_index,
                               std::size_t source_index, double scale, bool want_grads) {
  if (z.cols() != decoder.spec().input_width() || x.cols() != decoder.spec().output_width()) {
    throw InvalidInput("reconstruction: decoder shape does not match views/encodings");
  }
  if (!want_grads) {
    term.value += scale * (predict(decoder, z) - x).squaredNorm();
    return;
  }
  ForwardResult fwd = forward(decoder, z);
  Matrix diff = fwd.output - x;
  term.value += scale * diff.squaredNorm();
  BackwardResult back = backward(decoder, fwd.tape, (2.0 * scale) * diff);
  term.decoder_grads[decoder_index] += back.grads;
  term.encoding_grads[source_index] += back.grad_input;
}

ReconstructionTerm start_term(std::span<const Matrix> views, std::span<const Matrix> encodings,
                              std::span<const Mlp> decoders, std::span<const double> normalizers,
                              bool want_grads) {
  const std::size_t k = views.size();
  require(encodings.size() == k && decoders.size() == k && normalizers.size() == k,
          "reconstruction: one encoding, decoder and normalizer per view required");
  ReconstructionTerm term;
  if (want_grads) {
    for (std::size_t i = 0; i < k; ++i) {
      require(encodings[i].rows() == views[i].rows(), "reconstruction: batch size mismatch");
      term.encoding_grads.push_back(Matrix::Zero(encodings[i].rows(), encodings[i].cols()));
      term.decoder_grads.push_back(decoders[i].zeros_like());
    }
  }
  return term;
}

}  // namespace

ReconstructionTerm l_term(std::span<const Matrix> views, std::span<const Matrix> encodings,
                          std::span<const Mlp> decoders, std::span<const double> normalizers,
                          bool want_grads) {
  ReconstructionTerm term = start_term(views, encodings, decoders, normalizers, want_grads);
  for (std::size_t k = 0; k < views.size(); ++k) {
    const double scale = 1.0 / (static_cast<double>(views[k].rows()) * normalizers[k]);
    accumulate_reconstruction(term, views[k], encodings[k], decoders[k], k, k, scale, want_grads);
  }
  return term;
}

ReconstructionTerm q_term(std::span<const Matrix> views, std::span<const Matrix> encodings,
                          std::span<const Mlp> decoders, std::span<const double> normalizers,
                          bool want_grads) {
  require(views.size() >= 2, "q_term: requires at least two views");
  ReconstructionTerm term = start_term(views, encodings, decoders, normalizers, want_grads);
  const double others = static_cast<double>(views.size() - 1);
  for (std::size_t k = 0; k < views.size(); ++k) {
    const double scale = 1.0 / (static_cast<double>(views[k].rows()) * normalizers[k] * others);
    for (std::size_t j = 0; j < views.size(); ++j) {
      if (j == k) continue;
      require(encodings[j].rows() == views[k].rows(), "q_term: batch size mismatch");
      accumulate_reconstruction(term, views[k], encodings[j], decoders[k], k, j, scale,
                                want_grads);
    }
  }
  return term;
}

LossBreakdown compose(const ObjectiveSpec& spec, double r, double l, double q) {
  LossBreakdown out{r, l, q, 0.0};
  switch (spec.method) {
    case Method::dgcca: out.total = r; break;
    case Method::dccae: out.total = (1.0 - spec.lambda) * r + spec.lambda * l; break;
    case Method::proposed: out.total = (1.0 - spec.lambda) * r + spec.lambda * q; break;
    default: throw InvalidInput("compose: method has no trainable objective");
  }
  return out;
}

ObjectiveResult evaluate_objective(const ObjectiveSpec& spec, std::span<const Matrix> views,
                                   std::span<const Mlp> encoders, std::span<const Mlp> decoders,
                                   const Matrix& g, bool want_grads) {
  const std::size_t k_views = views.size();
  spec.validate(k_views);
  require(encoders.size() == k_views, "evaluate_objective: one encoder per view required");
  const bool reconstruct = has_decoders(spec.method);
  if (reconstruct) require(decoders.size() == k_views, "evaluate_objective: decoders missing");

  std::vector<Matrix> encodings;
  std::vector<Tape> tapes;
  for (std::size_t k = 0; k < k_views; ++k) {
    require(views[k].rows() == g.rows(), "evaluate_objective: batch/target row mismatch");
    if (want_grads) {
      ForwardResult fwd = forward(encoders[k], views[k]);
      encodings.push_back(std::move(fwd.output));
      tapes.push_back(std::move(fwd.tape));
    } else {
      encodings.push_back(predict(encoders[k], views[k]));
    }
  }

  TermResult r = r_term(encodings, g);
  const double r_scale = spec.normalize_r ? 1.0 / static_cast<double>(g.cols()) : 1.0;
  r.value *= r_scale;

  ReconstructionTerm rec;
  double l_value = 0.0, q_value = 0.0;
  if (spec.method == Method::dccae) {
    rec = l_term(views, encodings, decoders, spec.normalizers, want_grads);
    l_value = rec.value;
  } else if (spec.method == Method::proposed) {
    rec = q_term(views, encodings, decoders, spec.normalizers, want_grads);
    q_value = rec.value;
  }

  ObjectiveResult out;
  out.loss = compose(spec, r.value, l_value, q_value);
  if (!std::isfinite(out.loss.total)) throw NonFiniteLoss("objective is not finite");
  if (!want_grads) return out;

  const double r_weight = (reconstruct ? 1.0 - spec.lambda : 1.0) * r_scale;
  const double rec_weight = reconstruct ? spec.lambda : 0.0;
  for (std::size_t k = 0; k < k_views; ++k) {
    Matrix grad = r_weight * r.grads[k];
    if (reconstruct) grad += rec_weight * rec.encoding_grads[k];
    out.encoder_grads.push_back(backward(encoders[k], tapes[k], grad).grads);
    if (reconstruct) {
      rec.decoder_grads[k] *= rec_weight;
      out.decoder_grads.push_back(std::move(rec.decoder_grads[k]));
    }
  }
  return out;
}

}  // namespace mvgcca
