#include "mvgcca/trainer.hpp"

#include "mvgcca/linear_cca.hpp"
#include "mvgcca/numerics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace mvgcca {
namespace {

constexpr double kTargetTolerance = 1e-8;
constexpr double kMeanTolerance = 1e-10;

// Independent random streams derived from one seed, so that e.g. decoder
// initialization never perturbs encoder initialization.
enum class Stream : std::uint32_t { encoders = 1, decoders = 2, shuffle = 3 };

std::mt19937_64 make_stream(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

Matrix gather_rows(const Matrix& m, std::span<const Eigen::Index> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

Matrix sum_of(std::span<const Matrix> encodings) {
  Matrix y = encodings.front();
  for (size_t k = 1; k < encodings.size(); ++k) y += encodings[k];
  return y;
}

// Appends unit vectors orthogonalized against the existing columns (and the
// all-ones direction) until `basis` has `target_cols` columns.
void complete_centered_basis(Matrix& basis, Eigen::Index rank, Eigen::Index target_cols) {
  const Eigen::Index m = basis.rows();
  Matrix full(m, target_cols + 1);
  full.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(m)));
  full.middleCols(1, rank) = basis.leftCols(rank);
  Eigen::Index axis = 0;
  for (Eigen::Index j = rank + 1; j <= target_cols; ++j) {
    for (; axis < m; ++axis) {
      full.col(j).setZero();
      full(axis, j) = 1.0;
      for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index i = 0; i < j; ++i) full.col(j) -= full.col(i).dot(full.col(j)) * full.col(i);
      const double norm = full.col(j).norm();
      if (norm > 0.5) {
        full.col(j) /= norm;
        ++axis;
        break;
      }
    }
  }
  basis = full.rightCols(target_cols);
}

TrainedModel fit_linear(std::span<const Matrix> train_views,
                        std::span<const Matrix> validation_views, const TrainConfig& config) {
  LinearProjections fit;
  if (config.method == Method::linear_cca) {
    require(train_views.size() == 2, "linear-cca is defined for two views");
    fit = cca_two_view(train_views[0], train_views[1], config.latent_dim);
  } else {
    fit = maxvar_gcca(train_views, config.latent_dim);
  }
  TrainedModel model;
  model.method = config.method;
  model.lambda = config.lambda;
  for (size_t k = 0; k < train_views.size(); ++k) model.encoders.push_back(fit.as_encoder(k));

  auto residual = [&](std::span<const Matrix> views) {
    const std::vector<Matrix> enc = encode_views(model.encoders, views);
    const SharedTarget target = update_shared_target(enc);
    return r_term(enc, target.g).value;
  };
  IterationRecord record;
  record.train_objective = record.train_r = residual(train_views);
  record.validation_objective = record.validation_r = residual(validation_views);
  model.history.push_back(record);
  model.best_validation_objective = record.validation_objective;
  return model;
}

}  // namespace

ProcrustesUpdate procrustes_update(const Matrix& summed_encodings) {
  const Eigen::Index m = summed_encodings.rows();
  const Eigen::Index f = summed_encodings.cols();
  require(m > f, "procrustes_update: need more rows than columns");
  require(all_finite(summed_encodings), "procrustes_update: non-finite encodings");

  ProcrustesUpdate out;
  Matrix y = summed_encodings;
  out.mean = center_columns(y);
  ThinSvd svd = thin_svd(y);

  const double s_max = svd.singular_values(0);
  Eigen::Index rank = 0;
  while (rank < f && svd.singular_values(rank) > 1e-12 * s_max && svd.singular_values(rank) > 0.0)
    ++rank;
  if (rank < f) {
    out.target.degenerate = true;
    complete_centered_basis(svd.u, rank, f);
  }

  const double sqrt_m = std::sqrt(static_cast<double>(m));
  out.target.g = sqrt_m * svd.u * svd.v.transpose();

  Vector inv = Vector::Zero(f);
  for (Eigen::Index i = 0; i < rank; ++i) inv(i) = 1.0 / svd.singular_values(i);
  out.transform = sqrt_m * svd.v * inv.asDiagonal() * svd.v.transpose();
  return out;
}

SharedTarget update_shared_target(std::span<const Matrix> encodings) {
  require(!encodings.empty(), "update_shared_target: no encodings");
  return procrustes_update(sum_of(encodings)).target;
}

TargetDiagnostics check_target(const Matrix& g) {
  const double m = static_cast<double>(g.rows());
  TargetDiagnostics d;
  d.gram_error =
      (g.transpose() * g / m - Matrix::Identity(g.cols(), g.cols())).cwiseAbs().maxCoeff();
  d.mean_error = g.colwise().mean().cwiseAbs().maxCoeff();
  return d;
}

void TrainConfig::validate(Eigen::Index train_rows) const {
  require(outer_iterations > 0, "outer_iterations must be positive");
  require(batch_size > 0, "batch_size must be positive");
  require(batch_size <= train_rows, "batch_size exceeds the number of training samples");
  require(latent_dim > 0 && latent_dim < train_rows, "latent_dim must be in [1, M)");
  require(learning_rate > 0.0 && weight_decay >= 0.0, "invalid optimizer settings");
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must be in [0, 1]");
  require(hidden_width > 0 && hidden_layers >= 0, "invalid network shape");
}

std::vector<Matrix> encode_views(std::span<const Mlp> encoders, std::span<const Matrix> views) {
  require(encoders.size() == views.size(), "encode_views: one encoder per view required");
  std::vector<Matrix> out;
  for (size_t k = 0; k < views.size(); ++k) out.push_back(predict(encoders[k], views[k]));
  return out;
}

LossBreakdown split_objective(const TrainedModel& model, std::span<const Matrix> views,
                              const TrainConfig& config) {
  const std::vector<Matrix> enc = encode_views(model.encoders, views);
  const SharedTarget target = update_shared_target(enc);
  ObjectiveSpec spec{model.method, model.lambda, model.normalizers, config.normalize_r};
  return evaluate_objective(spec, views, model.encoders, model.decoders, target.g, false).loss;
}

TrainedModel train(std::span<const Matrix> train_views, std::span<const Matrix> validation_views,
                   const TrainConfig& config, const IterationObserver& observer) {
  require(!train_views.empty(), "train: no views");
  require(validation_views.size() == train_views.size(), "train: split view counts differ");
  const Eigen::Index m = train_views.front().rows();
  for (size_t k = 0; k < train_views.size(); ++k) {
    require(train_views[k].rows() == m, "train: training views are not row-aligned");
    require(validation_views[k].rows() == validation_views.front().rows(),
            "train: validation views are not row-aligned");
    require(validation_views[k].cols() == train_views[k].cols(), "train: split widths differ");
  }
  require(validation_views.front().rows() > config.latent_dim, "train: validation split too small");
  config.validate(m);

  if (!is_deep(config.method)) return fit_linear(train_views, validation_views, config);

  const size_t k_views = train_views.size();
  TrainedModel model;
  model.method = config.method;
  model.lambda = config.lambda;
  model.normalizers = view_normalizers(train_views);

  auto encoder_rng = make_stream(config.seed, Stream::encoders);
  auto decoder_rng = make_stream(config.seed, Stream::decoders);
  auto shuffle_rng = make_stream(config.seed, Stream::shuffle);

  std::vector<Mlp> encoders, decoders;
  std::vector<AdamState> encoder_opt, decoder_opt;
  for (size_t k = 0; k < k_views; ++k) {
    const int d = static_cast<int>(train_views[k].cols());
    encoders.push_back(init_mlp(MlpSpec::uniform(d, config.hidden_width, config.hidden_layers,
                                                 config.latent_dim, config.activate_last_hidden),
                                encoder_rng, config.init));
    encoder_opt.push_back(
        AdamState::for_mlp(encoders.back(), config.learning_rate, config.weight_decay));
  }
  if (has_decoders(config.method)) {
    for (size_t k = 0; k < k_views; ++k) {
      const int d = static_cast<int>(train_views[k].cols());
      decoders.push_back(init_mlp(MlpSpec::uniform(config.latent_dim, config.hidden_width,
                                                   config.hidden_layers, d,
                                                   config.activate_last_hidden),
                                  decoder_rng, config.init));
      decoder_opt.push_back(
          AdamState::for_mlp(decoders.back(), config.learning_rate, config.weight_decay));
    }
  }

  const ObjectiveSpec spec{config.method, config.lambda, model.normalizers, config.normalize_r};
  std::vector<Eigen::Index> order(static_cast<size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<Eigen::Index>(config.batch_size);
  bool have_best = false;

  for (int iteration = 0; iteration < config.outer_iterations; ++iteration) {
    const auto start = std::chrono::steady_clock::now();

    const ProcrustesUpdate update = procrustes_update(sum_of(encode_views(encoders, train_views)));
    const Matrix& g = update.target.g;
    const TargetDiagnostics diag = check_target(g);
    if (diag.gram_error > kTargetTolerance || diag.mean_error > kMeanTolerance) {
      std::ostringstream msg;
      msg << "shared target violates its constraints at iteration " << iteration
          << " (gram " << diag.gram_error << ", mean " << diag.mean_error << ")";
      throw ContractViolation(msg.str());
    }

    std::shuffle(order.begin(), order.end(), shuffle_rng);
    int batch_index = 0;
    for (Eigen::Index begin = 0; begin < m; begin += batch, ++batch_index) {
      const Eigen::Index end = std::min(m, begin + batch);
      const std::span<const Eigen::Index> rows(order.data() + begin, static_cast<size_t>(end - begin));
      std::vector<Matrix> batch_views;
      for (const Matrix& v : train_views) batch_views.push_back(gather_rows(v, rows));
      const Matrix batch_g = gather_rows(g, rows);
      try {
        ObjectiveResult result = evaluate_objective(spec, batch_views, encoders, decoders, batch_g);
        for (size_t k = 0; k < k_views; ++k)
          adamw_step(encoders[k], result.encoder_grads[k], encoder_opt[k]);
        for (size_t k = 0; k < decoders.size(); ++k)
          adamw_step(decoders[k], result.decoder_grads[k], decoder_opt[k]);
      } catch (const NonFiniteLoss& e) {
        std::ostringstream msg;
        msg << "non-finite loss at iteration " << iteration << ", batch " << batch_index << ": "
            << e.what();
        throw NonFiniteLoss(msg.str());
      }
    }

    IterationRecord record;
    record.iteration = iteration;
    record.target = diag;
    const LossBreakdown train_loss =
        evaluate_objective(spec, train_views, encoders, decoders, g, false).loss;
    record.train_objective = train_loss.total;
    record.train_r = train_loss.r;
    record.train_reconstruction = train_loss.reconstruction(config.method);

    const std::vector<Matrix> val_enc = encode_views(encoders, validation_views);
    Matrix val_g;
    if (config.validation_target == ValidationTarget::split_local) {
      val_g = update_shared_target(val_enc).g;
    } else {
      const ProcrustesUpdate post = procrustes_update(sum_of(encode_views(encoders, train_views)));
      val_g = (sum_of(val_enc).rowwise() - post.mean) * post.transform;
    }
    const LossBreakdown val_loss =
        evaluate_objective(spec, validation_views, encoders, decoders, val_g, false).loss;
    record.validation_objective = val_loss.total;
    record.validation_r = val_loss.r;
    record.validation_reconstruction = val_loss.reconstruction(config.method);
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    model.history.push_back(record);
    if (!have_best || record.validation_objective < model.best_validation_objective) {
      have_best = true;
      model.best_validation_objective = record.validation_objective;
      model.best_iteration = iteration;
      model.encoders = encoders;
      model.decoders = decoders;
    }
    if (observer) observer(record);
  }
  return model;
}

IterationCost per_iteration_cost(double m, double f, double batch,
                                 std::span<const std::size_t> param_counts) {
  IterationCost cost;
  cost.target_update = m * f * f;
  double params = 0.0;
  for (std::size_t d : param_counts) params += static_cast<double>(d);
  cost.network_update = batch * params;
  cost.total = cost.target_update + cost.network_update;
  return cost;
}

}  // namespace mvgcca
