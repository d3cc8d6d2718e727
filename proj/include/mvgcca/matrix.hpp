#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace mvgcca {

// Row-major so that one sample is one contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Labels = std::vector<int>;

/// Bad shapes, out-of-range arguments, non-finite data.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A covariance that needs regularization was given none.
class IllConditioned : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a NaN or infinity.
class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// API misuse, e.g. a backward pass fed a tape from another network.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidInput(message);
}

/// Subtracts the column means in place and returns them.
inline RowVector center_columns(Matrix& m) {
  RowVector mean = m.colwise().mean();
  m.rowwise() -= mean;
  return mean;
}

inline Matrix centered(const Matrix& m) {
  Matrix out = m;
  center_columns(out);
  return out;
}

/// Mean squared row norm, the "power" of a set of samples.
inline double mean_squared_norm(const Matrix& m) {
  return m.rows() == 0 ? 0.0 : m.squaredNorm() / static_cast<double>(m.rows());
}

}  // namespace mvgcca
