#pragma once

#include "mvgcca/matrix.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace testing_support {

using mvgcca::Matrix;

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                            double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

inline Matrix random_orthogonal(std::mt19937_64& rng, Eigen::Index n) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(random_matrix(rng, n, n)));
  return Matrix(qr.householderQ());
}

/// Random centered M x F matrix h with h^T h = M I.
inline Matrix random_feasible_target(std::mt19937_64& rng, Eigen::Index m, Eigen::Index f) {
  Matrix h = random_matrix(rng, m, f);
  mvgcca::center_columns(h);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr{Eigen::MatrixXd(h)};
  Matrix q = Matrix(qr.householderQ()).leftCols(f);
  return std::sqrt(static_cast<double>(m)) * q;
}

/// Central differences of a scalar function of a parameter vector.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& fn,
                                            std::vector<double> x, double step = 1e-5) {
  std::vector<double> grad(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = fn(x);
    x[i] = saved - step;
    const double down = fn(x);
    x[i] = saved;
    grad[i] = (up - down) / (2 * step);
  }
  return grad;
}

/// max |a - b| / max(|a|_inf, |b|_inf, floor)
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b,
                             double floor = 1e-6) {
  double diff = 0.0, scale = floor;
  for (size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  return diff / scale;
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

inline std::vector<std::vector<long>> contingency(const std::vector<int>& a, const std::vector<int>& b) {
  const int ka = *std::max_element(a.begin(), a.end()) + 1;
  const int kb = *std::max_element(b.begin(), b.end()) + 1;
  std::vector<std::vector<long>> n(ka, std::vector<long>(kb, 0));
  for (size_t i = 0; i < a.size(); ++i) ++n[a[i]][b[i]];
  return n;
}

/// Permutation search over all k! relabelings.
inline double brute_force_accuracy(const std::vector<int>& pred, const std::vector<int>& truth, int k) {
  std::vector<int> perm(k);
  for (int i = 0; i < k; ++i) perm[i] = i;
  long best = 0;
  do {
    long hits = 0;
    for (size_t i = 0; i < pred.size(); ++i) hits += perm[pred[i]] == truth[i];
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(pred.size());
}

// Global optimum over all 2^n two-cluster assignments.
inline double exhaustive_two_means(const Matrix& x) {
  const int n = static_cast<int>(x.rows());
  double best = std::numeric_limits<double>::infinity();
  for (int mask = 1; mask < (1 << n) - 1; ++mask) {
    double sse = 0.0;
    for (int side = 0; side < 2; ++side) {
      mvgcca::RowVector sum = mvgcca::RowVector::Zero(x.cols());
      int count = 0;
      for (int i = 0; i < n; ++i)
        if (((mask >> i) & 1) == side) sum += x.row(i), ++count;
      const mvgcca::RowVector mean = sum / count;
      for (int i = 0; i < n; ++i)
        if (((mask >> i) & 1) == side) sse += (x.row(i) - mean).squaredNorm();
    }
    best = std::min(best, sse);
  }
  return best;
}

struct TwoViews {
  Matrix x1, x2;
};

// Views sharing a latent factor of dimension `shared`, plus private noise.
inline TwoViews coupled_views(std::mt19937_64& rng, int m, int d1, int d2, int shared, double noise) {
  const Matrix z = random_matrix(rng, m, shared);
  return {z * random_matrix(rng, shared, d1) + noise * random_matrix(rng, m, d1),
          z * random_matrix(rng, shared, d2) + noise * random_matrix(rng, m, d2)};
}

}  // namespace testing_support
