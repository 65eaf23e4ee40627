#pragma once

#include <vector>

#include "optlab/numerics/matrix.hpp"

namespace optlab {

/// Thin Q factor of a (rows >= cols), normalized so that diag(R) >= 0.
/// Throws DegenerateInput when a is rank deficient.
Matrix qr_orthonormal(const Matrix& a);

/// Householder Q of a square matrix with the same sign normalization, but
/// tolerant of rank deficiency: columns spanning the null space are whatever
/// the reflectors produce. SOAP refreshes go through this, since early
/// covariance statistics have rank bounded by the step count.
Matrix qr_orthogonal_factor(const Matrix& a);

struct SymmetricEigen {
  std::vector<double> values;  // descending
  Matrix vectors;              // column k pairs with values[k]
};

/// Eigen-decomposition of a symmetric matrix. Columns are ordered by
/// descending eigenvalue (stable for ties) and each column's largest-magnitude
/// component is made positive.
SymmetricEigen sym_eigen(const Matrix& a);

/// Just the eigenvector matrix of sym_eigen.
Matrix sym_eigenbasis(const Matrix& a);

/// Singular values of a, descending, from the eigenvalues of aᵀa.
std::vector<double> svd_singular_values(const Matrix& a);

}  // namespace optlab

namespace optlab {

/// Solves a x = b for symmetric positive definite a (Cholesky).
/// Throws DegenerateInput when a is not positive definite.
std::vector<double> solve_spd(const Matrix& a, const std::vector<double>& b);

}  // namespace optlab
