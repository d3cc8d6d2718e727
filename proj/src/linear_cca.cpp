#include "mvgcca/linear_cca.hpp"

#include "mvgcca/numerics.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace mvgcca {
namespace {

Matrix covariance(const Matrix& a, const Matrix& b) {
  return a.transpose() * b / static_cast<double>(a.rows());
}

// Flips column j of every matrix in `targets` so that column j of `reference`
// has its largest-magnitude entry positive.
void fix_signs(Matrix& reference, std::vector<Matrix*> targets) {
  for (Eigen::Index j = 0; j < reference.cols(); ++j) {
    Eigen::Index arg = 0;
    reference.col(j).cwiseAbs().maxCoeff(&arg);
    if (reference(arg, j) < 0.0) {
      reference.col(j) *= -1.0;
      for (Matrix* t : targets) t->col(j) *= -1.0;
    }
  }
}

double resolve_ridge(const Matrix& centered_view, std::optional<double> ridge) {
  if (ridge) {
    require(*ridge >= 0.0, "ridge must be non-negative");
    return *ridge;
  }
  return default_ridge(centered_view);
}

}  // namespace

Matrix LinearProjections::project(std::size_t view, const Matrix& x) const {
  require(view < q.size(), "project: view index out of range");
  require(x.cols() == q[view].rows(), "project: width mismatch");
  return (x.rowwise() - means[view]) * q[view];
}

Mlp LinearProjections::as_encoder(std::size_t view) const {
  require(view < q.size(), "as_encoder: view index out of range");
  MlpSpec spec{{static_cast<int>(q[view].rows()), static_cast<int>(q[view].cols())}, true};
  Mlp mlp(spec);
  mlp.weights()[0] = q[view].transpose();
  mlp.biases()[0] = -(means[view] * q[view]).transpose();
  return mlp;
}

double default_ridge(const Matrix& centered_view) {
  const double d = static_cast<double>(centered_view.cols());
  const double trace = centered_view.squaredNorm() / static_cast<double>(centered_view.rows());
  const double ridge = 1e-8 * trace / d;
  return ridge > 0.0 ? ridge : 1e-12;
}

LinearProjections cca_two_view(const Matrix& x1, const Matrix& x2, int f,
                               std::optional<double> ridge) {
  require(x1.rows() == x2.rows(), "cca_two_view: views must be row-aligned");
  require(f > 0 && f <= std::min(x1.cols(), x2.cols()),
          "cca_two_view: f must be in [1, min(D1, D2)]");
  require(x1.rows() > f, "cca_two_view: need more samples than dimensions");
  require(all_finite(x1) && all_finite(x2), "cca_two_view: non-finite input");

  LinearProjections out;
  Matrix c1 = x1, c2 = x2;
  out.means = {center_columns(c1), center_columns(c2)};
  const double r1 = resolve_ridge(c1, ridge);
  const double r2 = resolve_ridge(c2, ridge);

  const Matrix w1 = inverse_sqrt_spd(covariance(c1, c1), r1);
  const Matrix w2 = inverse_sqrt_spd(covariance(c2, c2), r2);
  const Matrix t = w1 * covariance(c1, c2) * w2;

  Matrix left, right;
  Vector s;
  if (t.rows() >= t.cols()) {
    ThinSvd svd = thin_svd(t);
    left = svd.u;
    right = svd.v;
    s = svd.singular_values;
  } else {
    ThinSvd svd = thin_svd(t.transpose());
    left = svd.v;
    right = svd.u;
    s = svd.singular_values;
  }
  Matrix q1 = w1 * left.leftCols(f);
  Matrix q2 = w2 * right.leftCols(f);
  out.canonical_correlations = s.head(f).cwiseMax(0.0).cwiseMin(1.0);

  Matrix z1 = c1 * q1;
  Matrix z2 = c2 * q2;
  fix_signs(z1, {&q1, &q2, &z2});
  out.q = {std::move(q1), std::move(q2)};
  out.g = z1 + z2;
  const double sqrt_m = std::sqrt(static_cast<double>(out.g.rows()));
  for (Eigen::Index j = 0; j < out.g.cols(); ++j) out.g.col(j) *= sqrt_m / out.g.col(j).norm();
  return out;
}

LinearProjections maxvar_gcca(std::span<const Matrix> views, int f, std::optional<double> ridge) {
  require(views.size() >= 2, "maxvar_gcca: needs at least two views");
  const Eigen::Index m = views.front().rows();
  require(f > 0 && m > f, "maxvar_gcca: need 0 < f < M");

  LinearProjections out;
  std::vector<Matrix> centered_views;
  std::vector<double> ridges;
  Eigen::Index total_dim = 0;
  for (const Matrix& v : views) {
    require(v.rows() == m, "maxvar_gcca: views must be row-aligned");
    require(all_finite(v), "maxvar_gcca: non-finite input");
    Matrix c = v;
    out.means.push_back(center_columns(c));
    ridges.push_back(resolve_ridge(c, ridge));
    total_dim += c.cols();
    centered_views.push_back(std::move(c));
  }
  require(f <= total_dim, "maxvar_gcca: f exceeds total view dimension");

  // Z = [W_1 ... W_K] with W_k W_k^T = X_k (X_k^T X_k + M r_k I)^{-1} X_k^T,
  // so the leading left singular vectors of Z are the MAX-VAR solution.
  const double sqrt_m = std::sqrt(static_cast<double>(m));
  Matrix z(m, total_dim);
  Eigen::Index offset = 0;
  for (size_t k = 0; k < centered_views.size(); ++k) {
    const Matrix& c = centered_views[k];
    const Matrix w = inverse_sqrt_spd(covariance(c, c), ridges[k]);
    z.middleCols(offset, c.cols()) = c * w / sqrt_m;
    offset += c.cols();
  }

  Matrix u;
  Vector lambdas;
  if (m >= total_dim) {
    ThinSvd svd = thin_svd(z);
    u = svd.u.leftCols(f);
    lambdas = svd.singular_values.head(f).cwiseAbs2();
  } else {
    Matrix zz = z * z.transpose();
    SymEig eig = sym_eig(0.5 * (zz + zz.transpose()));
    u = eig.eigenvectors.leftCols(f);
    lambdas = eig.eigenvalues.head(f);
  }
  out.eigenvalues = lambdas;
  out.g = sqrt_m * u;
  fix_signs(out.g, {});

  for (size_t k = 0; k < centered_views.size(); ++k) {
    const Matrix& c = centered_views[k];
    Matrix gram = c.transpose() * c;
    gram.diagonal().array() += static_cast<double>(m) * ridges[k];
    out.q.push_back(gram.ldlt().solve(c.transpose() * out.g));
  }
  if (views.size() == 2) {
    out.canonical_correlations = (lambdas.array() - 1.0).cwiseMax(0.0).cwiseMin(1.0).matrix();
  }
  return out;
}

double maxvar_objective(std::span<const Matrix> views, const LinearProjections& fit) {
  double total = 0.0;
  for (size_t k = 0; k < views.size(); ++k) {
    total += (fit.project(k, views[k]) - fit.g).squaredNorm();
  }
  return total / static_cast<double>(fit.g.rows());
}

CanonicalCorrelations canonical_corrs(const Matrix& z1, const Matrix& z2) {
  require(z1.rows() == z2.rows(), "canonical_corrs: row mismatch");
  require(z1.rows() > std::max(z1.cols(), z2.cols()), "canonical_corrs: need M > F");
  require(all_finite(z1) && all_finite(z2), "canonical_corrs: non-finite input");

  CanonicalCorrelations out;
  const Matrix c1 = centered(z1);
  const Matrix c2 = centered(z2);

  auto whitener = [&](const Matrix& c) {
    const Matrix cov = covariance(c, c);
    const SymEig eig = sym_eig(cov, 1e-10 * std::max(1.0, cov.cwiseAbs().maxCoeff()));
    const double largest = eig.eigenvalues.size() ? eig.eigenvalues(0) : 0.0;
    const double smallest = eig.eigenvalues.size() ? eig.eigenvalues(eig.eigenvalues.size() - 1) : 0.0;
    double ridge = 0.0;
    if (!(largest > 0.0) || smallest <= 1e-10 * largest) {
      out.regularized = true;
      ridge = 1e-10 * std::max(largest, 1.0);
    }
    Vector inv = (eig.eigenvalues.cwiseMax(0.0).array() + ridge).sqrt().inverse().matrix();
    return Matrix(eig.eigenvectors * inv.asDiagonal() * eig.eigenvectors.transpose());
  };

  const Matrix t = whitener(c1) * covariance(c1, c2) * whitener(c2);
  const Vector s = t.rows() >= t.cols() ? thin_svd(t).singular_values
                                        : thin_svd(t.transpose()).singular_values;
  out.values = s.cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

double total_corr_coef(std::span<const Matrix> embeddings) {
  require(embeddings.size() >= 2, "total_corr_coef: needs at least two views");
  double sum = 0.0;
  int pairs = 0;
  for (size_t i = 0; i < embeddings.size(); ++i) {
    for (size_t j = i + 1; j < embeddings.size(); ++j) {
      sum += canonical_corrs(embeddings[i], embeddings[j]).values.mean();
      ++pairs;
    }
  }
  return sum / pairs;
}

}  // namespace mvgcca
