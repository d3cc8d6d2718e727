#include "mvgcca/linear_cca.hpp"
#include "support.hpp"

#include <doctest.h>

#include <numbers>

using namespace mvgcca;
using namespace testing_support;

namespace {

double pearson(const Vector& a, const Vector& b) {
  const Vector ca = a.array() - a.mean();
  const Vector cb = b.array() - b.mean();
  return ca.dot(cb) / std::sqrt(ca.squaredNorm() * cb.squaredNorm());
}

}  // namespace

TEST_CASE("identical full-rank views are perfectly correlated") {
  std::mt19937_64 rng(21);
  const Matrix x = random_matrix(rng, 100, 3);
  const LinearProjections fit = cca_two_view(x, x, 3, 0.0);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(fit.canonical_correlations(i) - 1.0) <= 1e-8);
}

TEST_CASE("independent views have near-zero correlations") {
  std::mt19937_64 rng(22);
  const int m = 5000;
  const LinearProjections fit = cca_two_view(random_matrix(rng, m, 2), random_matrix(rng, m, 2), 2);
  CHECK(fit.canonical_correlations(0) < 3.0 / std::sqrt(static_cast<double>(m)));
}

TEST_CASE("top canonical correlation matches a grid search over unit directions") {
  std::mt19937_64 rng(23);
  const int m = 400;
  const Matrix x1 = random_matrix(rng, m, 2);
  const double angle = 0.7;
  Matrix rot(2, 2);
  rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  Matrix x2 = x1 * rot;
  x2.col(0) += 0.3 * random_matrix(rng, m, 1);
  x2.col(1) += 1.5 * random_matrix(rng, m, 1);

  const Matrix c1 = centered(x1), c2 = centered(x2);
  const Matrix s11 = c1.transpose() * c1, s22 = c2.transpose() * c2, s12 = c1.transpose() * c2;
  double best = 0.0;
  const int steps = 720;
  for (int i = 0; i < steps; ++i) {
    const double t1 = std::numbers::pi * i / steps;
    const Eigen::Vector2d a(std::cos(t1), std::sin(t1));
    for (int j = 0; j < steps; ++j) {
      const double t2 = std::numbers::pi * j / steps;
      const Eigen::Vector2d b(std::cos(t2), std::sin(t2));
      const double corr = std::abs(a.dot(s12 * b)) / std::sqrt(a.dot(s11 * a) * b.dot(s22 * b));
      best = std::max(best, corr);
    }
  }
  const LinearProjections fit = cca_two_view(x1, x2, 2);
  CHECK(std::abs(fit.canonical_correlations(0) - best) <= 1e-3);
}

TEST_CASE("two-view CCA is invariant to invertible reparameterization") {
  std::mt19937_64 rng(24);
  const TwoViews v = coupled_views(rng, 300, 4, 3, 2, 0.5);
  const LinearProjections base = cca_two_view(v.x1, v.x2, 2, 0.0);
  Matrix a = random_matrix(rng, 4, 4);
  a.diagonal().array() += 3.0;
  const LinearProjections moved = cca_two_view(v.x1 * a, v.x2, 2, 0.0);
  CHECK(max_abs(Matrix(base.canonical_correlations - moved.canonical_correlations)) <= 1e-8);
}

TEST_CASE("CCA target satisfies the shared-target constraints") {
  std::mt19937_64 rng(25);
  const TwoViews v = coupled_views(rng, 200, 5, 5, 2, 0.3);
  const LinearProjections fit = cca_two_view(v.x1, v.x2, 2);
  const double m = 200;
  CHECK(max_abs(fit.g.transpose() * fit.g / m - Matrix::Identity(2, 2)) <= 1e-6);
  CHECK(fit.g.colwise().mean().cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("explicit zero ridge on a singular covariance is ill-conditioned") {
  std::mt19937_64 rng(26);
  Matrix x1 = random_matrix(rng, 50, 3);
  x1.col(2) = x1.col(0);
  const Matrix x2 = random_matrix(rng, 50, 3);
  CHECK_THROWS_AS(cca_two_view(x1, x2, 2, 0.0), IllConditioned);
  CHECK_NOTHROW(cca_two_view(x1, x2, 2));
}

TEST_CASE("MAX-VAR with two views agrees with CCA on 50 instances") {
  std::mt19937_64 rng(27);
  for (int trial = 0; trial < 50; ++trial) {
    const TwoViews v = coupled_views(rng, 150, 3 + trial % 3, 4, 2, 0.8);
    const std::vector<Matrix> views{v.x1, v.x2};
    const LinearProjections mv = maxvar_gcca(views, 2);
    const LinearProjections cca = cca_two_view(v.x1, v.x2, 2);
    CHECK(max_abs(Matrix(mv.canonical_correlations - cca.canonical_correlations)) <= 1e-6);
  }
}

TEST_CASE("MAX-VAR recovers a planted common factor") {
  std::mt19937_64 rng(28);
  const int m = 500, f = 3;
  const Matrix g = random_matrix(rng, m, f);
  std::vector<Matrix> views;
  for (int k = 0; k < 3; ++k)
    views.push_back(g * random_matrix(rng, f, 6 + k) + 0.01 * random_matrix(rng, m, 6 + k));
  const LinearProjections fit = maxvar_gcca(views, f);
  const CanonicalCorrelations cosines = canonical_corrs(fit.g, g);
  const double largest_angle = std::acos(std::min(1.0, cosines.values(f - 1)));
  CHECK(largest_angle * 180.0 / std::numbers::pi < 2.0);
}

TEST_CASE("MAX-VAR on identical noiseless views has zero residual") {
  std::mt19937_64 rng(29);
  const Matrix g = random_matrix(rng, 120, 2);
  const Matrix x = g * random_matrix(rng, 2, 5);
  const std::vector<Matrix> views{x, x, x};
  const LinearProjections fit = maxvar_gcca(views, 2);
  CHECK(maxvar_objective(views, fit) <= 1e-6);
}

TEST_CASE("MAX-VAR residual is non-decreasing in f") {
  std::mt19937_64 rng(30);
  std::vector<Matrix> views;
  const Matrix z = random_matrix(rng, 200, 2);
  for (int k = 0; k < 3; ++k)
    views.push_back(z * random_matrix(rng, 2, 6) + 0.7 * random_matrix(rng, 200, 6));
  // Column i contributes K - lambda_i >= 0.
  double previous = -1.0;
  for (int f = 1; f <= 5; ++f) {
    const double value = maxvar_objective(views, maxvar_gcca(views, f));
    CHECK(value >= previous - 1e-9);
    previous = value;
  }
}

TEST_CASE("linear encoder reproduces the projection") {
  std::mt19937_64 rng(31);
  const TwoViews v = coupled_views(rng, 80, 4, 3, 2, 0.5);
  const std::vector<Matrix> views{v.x1, v.x2};
  const LinearProjections fit = maxvar_gcca(views, 2);
  for (size_t k = 0; k < 2; ++k)
    CHECK(max_abs(predict(fit.as_encoder(k), views[k]) - fit.project(k, views[k])) <= 1e-12);
}

TEST_CASE("canonical_corrs examples") {
  std::mt19937_64 rng(32);
  const Matrix z = random_matrix(rng, 60, 3);
  SUBCASE("rotation") {
    const CanonicalCorrelations c = canonical_corrs(z, z * random_orthogonal(rng, 3));
    for (int i = 0; i < 3; ++i) CHECK(std::abs(c.values(i) - 1.0) <= 1e-8);
    CHECK_FALSE(c.regularized);
  }
  SUBCASE("disjoint supports") {
    Matrix a = Matrix::Zero(8, 1), b = Matrix::Zero(8, 1);
    a.topRows(4) << 1, -1, 2, -2;
    b.bottomRows(4) << 3, -3, 1, -1;
    CHECK(canonical_corrs(a, b).values(0) <= 1e-12);
  }
  SUBCASE("scalar Pearson") {
    Matrix a(4, 1), b(4, 1);
    a << 1, 2, 3, 5;
    b << 2, 1, 4, 3;
    CHECK(canonical_corrs(a, b).values(0) == doctest::Approx(std::abs(pearson(a.col(0), b.col(0)))));
  }
  SUBCASE("rank deficient input is flagged") {
    Matrix a = z;
    a.col(2) = a.col(0);
    const CanonicalCorrelations c = canonical_corrs(a, z);
    CHECK(c.regularized);
    CHECK(c.values.allFinite());
  }
  SUBCASE("invariance to invertible maps") {
    const Matrix other = z.leftCols(2) * random_matrix(rng, 2, 3) + random_matrix(rng, 60, 3);
    Matrix a = random_matrix(rng, 3, 3);
    a.diagonal().array() += 4.0;
    const Vector base = canonical_corrs(z, other).values;
    CHECK(max_abs(Matrix(base - canonical_corrs(z * a, other).values)) <= 1e-8);
  }
}

TEST_CASE("total_corr_coef examples") {
  std::mt19937_64 rng(33);
  const Matrix z = random_matrix(rng, 40, 2);
  const std::vector<Matrix> same{z, z, z};
  CHECK(total_corr_coef(same) == doctest::Approx(1.0));

  const Matrix w = random_matrix(rng, 40, 2);
  const std::vector<Matrix> pair{z, w};
  CHECK(total_corr_coef(pair) == doctest::Approx(canonical_corrs(z, w).values.mean()));

  Matrix a = Matrix::Zero(40, 2), outlier = Matrix::Zero(40, 2);
  a.topRows(20) = random_matrix(rng, 20, 2);
  outlier.bottomRows(20) = random_matrix(rng, 20, 2);
  a.topRows(20).rowwise() -= a.topRows(20).colwise().mean();
  outlier.bottomRows(20).rowwise() -= outlier.bottomRows(20).colwise().mean();
  const std::vector<Matrix> three{a, a, outlier};
  CHECK(total_corr_coef(three) == doctest::Approx(1.0 / 3.0).epsilon(1e-8));
}
