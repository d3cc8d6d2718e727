#pragma once

#include "mvgcca/matrix.hpp"

namespace mvgcca {

/// Thin SVD a = u * diag(singular_values) * v^T with u (M x r), v (F x r), r = F.
struct ThinSvd {
  Matrix u;
  Vector singular_values;  // descending, non-negative
  Matrix v;
};

/// Eigenpairs of a symmetric matrix, eigenvalues descending, vectors as columns.
struct SymEig {
  Vector eigenvalues;
  Matrix eigenvectors;
  int sweeps = 0;
};

/// Cyclic Jacobi eigensolver. Throws InvalidInput when s is not symmetric
/// within 1e-10 (absolute) or contains non-finite entries.
SymEig sym_eig(const Matrix& s);

/// Same as sym_eig but accepts a caller-provided symmetry tolerance; used
/// internally for Gram matrices whose entries scale with the sample count.
SymEig sym_eig(const Matrix& s, double symmetry_tolerance);

/// Thin SVD of a tall matrix through the eigendecomposition of a^T a.
/// Columns of u whose singular value falls below 1e-12 * max(s) are completed
/// to an orthonormal basis, so u always has orthonormal columns.
ThinSvd thin_svd(const Matrix& a);

/// Symmetric inverse square root (s + ridge*I)^{-1/2}. Throws IllConditioned
/// when the smallest eigenvalue is not positive relative to the largest.
Matrix inverse_sqrt_spd(const Matrix& s, double ridge = 0.0);

}  // namespace mvgcca
