#include "mvgcca/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mvgcca {
namespace {

constexpr double kOffDiagonalTolerance = 1e-14;
constexpr int kMaxSweeps = 100;
constexpr double kRankTolerance = 1e-12;

double off_diagonal_norm(const Matrix& a) {
  double sum = 0.0;
  const Eigen::Index n = a.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j) sum += a(i, j) * a(i, j);
  return std::sqrt(sum);
}

// Orders eigenpairs by descending eigenvalue.
void sort_descending(Vector& values, Matrix& vectors) {
  const Eigen::Index n = values.size();
  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });
  Vector sorted_values(n);
  Matrix sorted_vectors(vectors.rows(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    sorted_values(i) = values(order[static_cast<size_t>(i)]);
    sorted_vectors.col(i) = vectors.col(order[static_cast<size_t>(i)]);
  }
  values = std::move(sorted_values);
  vectors = std::move(sorted_vectors);
}

// Orthogonalizes column j of q against columns [0, j) twice (modified
// Gram-Schmidt with reorthogonalization). Returns the remaining norm.
double orthogonalize_against(Matrix& q, Eigen::Index j) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index i = 0; i < j; ++i) {
      const double proj = q.col(i).dot(q.col(j));
      q.col(j) -= proj * q.col(i);
    }
  }
  return q.col(j).norm();
}

}  // namespace

SymEig sym_eig(const Matrix& s) { return sym_eig(s, 1e-10); }

SymEig sym_eig(const Matrix& s, double symmetry_tolerance) {
  require(s.rows() == s.cols(), "sym_eig: matrix must be square");
  require(all_finite(s), "sym_eig: non-finite entries");
  if (s.size() > 0) {
    require((s - s.transpose()).cwiseAbs().maxCoeff() <= symmetry_tolerance,
            "sym_eig: matrix is not symmetric");
  }

  const Eigen::Index n = s.rows();
  Matrix a = 0.5 * (s + s.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double threshold = kOffDiagonalTolerance * std::max(a.norm(), 1e-300);

  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a) <= threshold) break;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // 2x2 symmetric Schur decomposition.
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  SymEig result;
  result.eigenvalues = a.diagonal();
  result.eigenvectors = std::move(v);
  result.sweeps = sweep;
  sort_descending(result.eigenvalues, result.eigenvectors);
  return result;
}

ThinSvd thin_svd(const Matrix& a) {
  require(a.rows() >= a.cols(), "thin_svd: requires rows >= cols");
  require(all_finite(a), "thin_svd: non-finite entries");

  const Eigen::Index m = a.rows();
  const Eigen::Index f = a.cols();

  Matrix gram = a.transpose() * a;
  gram = 0.5 * (gram + gram.transpose());
  const double gram_scale = std::max(1.0, gram.cwiseAbs().maxCoeff());
  SymEig eig = sym_eig(gram, 1e-10 * gram_scale);

  ThinSvd out;
  out.singular_values = eig.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  out.v = std::move(eig.eigenvectors);
  out.u = Matrix::Zero(m, f);

  const double s_max = f > 0 ? out.singular_values(0) : 0.0;
  const double cutoff = kRankTolerance * s_max;

  Eigen::Index rank = 0;
  for (Eigen::Index j = 0; j < f; ++j) {
    if (out.singular_values(j) > cutoff && out.singular_values(j) > 0.0) {
      out.u.col(j) = a * out.v.col(j) / out.singular_values(j);
      rank = j + 1;
    } else {
      break;
    }
  }
  // Reorthogonalize the computed columns; the Gram route loses orthogonality
  // in proportion to the squared condition number.
  for (Eigen::Index j = 0; j < rank; ++j) {
    const double norm = orthogonalize_against(out.u, j);
    out.u.col(j) /= norm;
  }
  for (Eigen::Index j = rank; j < f; ++j) out.singular_values(j) = 0.0;

  // Complete the null columns with whichever unit vectors survive
  // orthogonalization best.
  Eigen::Index next_axis = 0;
  for (Eigen::Index j = rank; j < f; ++j) {
    double best_norm = -1.0;
    Vector best;
    for (Eigen::Index tries = 0; tries < m && best_norm < 0.5; ++tries, ++next_axis) {
      out.u.col(j).setZero();
      out.u(next_axis % m, j) = 1.0;
      const double norm = orthogonalize_against(out.u, j);
      if (norm > best_norm) {
        best_norm = norm;
        best = out.u.col(j);
      }
    }
    out.u.col(j) = best / best_norm;
  }
  return out;
}

Matrix inverse_sqrt_spd(const Matrix& s, double ridge) {
  Matrix reg = s;
  reg.diagonal().array() += ridge;
  const double scale = std::max(1.0, reg.cwiseAbs().maxCoeff());
  SymEig eig = sym_eig(reg, 1e-10 * scale);
  const Eigen::Index n = reg.rows();
  if (n == 0) return reg;
  const double largest = eig.eigenvalues(0);
  const double smallest = eig.eigenvalues(n - 1);
  if (!(largest > 0.0) || smallest <= 1e-13 * largest) {
    throw IllConditioned("covariance is singular; supply a ridge");
  }
  Vector inv_sqrt = eig.eigenvalues.cwiseSqrt().cwiseInverse();
  return eig.eigenvectors * inv_sqrt.asDiagonal() * eig.eigenvectors.transpose();
}

}  // namespace mvgcca
