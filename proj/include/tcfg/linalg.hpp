#pragma once

#include <span>

#include "tcfg/matrix.hpp"

namespace tcfg::linalg {

// Thin SVD A = W * diag(sigma) * V^T with k = min(rows, cols) factors.
//  - singular_values: descending, nonnegative
//  - left:  rows x k, orthonormal columns
//  - right: k x cols, orthonormal rows (row i is v_i^T)
// Each right vector is sign-normalized so that its first nonzero entry is
// positive; the matching left column is flipped with it.
struct SvdResult {
  Vector singular_values;
  Matrix left;
  Matrix right;

  Vector right_vector(std::size_t i) const { return right.row_vector(i); }
  Matrix reconstruct() const;
};

struct SymmetricEigen {
  Vector values;   // unsorted, in column order of `vectors`
  Matrix vectors;  // columns are eigenvectors
  int sweeps = 0;
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Stops once the
// off-diagonal Frobenius norm drops to 1e-14 * ||G||_F or after 50 sweeps.
SymmetricEigen jacobi_eigen(const Matrix& symmetric);

// Dispatches to the two-row closed form when the smaller side is 2,
// otherwise to the Gram/Jacobi path. Throws kInvalidInput on non-finite data.
SvdResult svd_thin(const Matrix& a);

// Gram matrix of the smaller side, eigendecomposed by cyclic Jacobi.
SvdResult svd_thin_jacobi(const Matrix& a);

// Closed-form SVD of a 2 x d matrix through its 2x2 Gram eigenproblem.
SvdResult svd_two_row(std::span<const double> row0, std::span<const double> row1);

// u.v / (|u| |v|), clamped to [-1, 1]. Throws kUndefinedSimilarity if either
// argument is the zero vector.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

// Principal square root of a symmetric positive-semidefinite 2x2 matrix.
// Eigenvalues down to -1e-12 are clamped to zero; anything more negative, or
// asymmetry beyond 1e-12, throws kInvalidInput.
Matrix spd_sqrt_2x2(const Matrix& m);

}  // namespace tcfg::linalg
