#pragma once

#include <cstdint>
#include <vector>

#include "lbnet/matrix.hpp"

namespace lbnet {

// LU factorization with partial pivoting, P*A = L*U. Factoring never
// throws; `singular` records whether a pivot collapsed below
// 1e-12 * max|a_ij| so callers can pick their own fallback. solve() on a
// flagged factor throws.
template <typename T>
struct LuFactor {
  Mat<T> lu;               // L below the diagonal (unit), U on and above
  std::vector<int> perm;   // row permutation applied to the right-hand side
  bool singular = false;
  double min_pivot = 0.0;  // smallest |u_ii|
  double max_pivot = 0.0;  // largest |u_ii|

  Mat<T> solve(const Mat<T>& b) const;
  // Solves A^T x = b reusing the factors of A (real only).
  Mat<T> solve_transposed(const Mat<T>& b) const;
};

template <typename T>
LuFactor<T> lu_factor(const Mat<T>& a);

// A x = B with one step of iterative refinement. Throws on non-square or
// singular A.
Matrix solve(const Matrix& a, const Matrix& b);
ComplexMatrix solve(const ComplexMatrix& a, const ComplexMatrix& b);

// Largest singular value by power iteration on M^T M: seeded start, one
// restart with a different seed if the estimate has not stabilized, then a
// convergence error carrying the last iterate.
double spectral_norm(const Matrix& m, double tol = 1e-9, int max_iters = 5000,
                     uint64_t seed = 7);

// Thin SVD, M = U diag(sigma) V^T with sigma non-increasing. Columns for
// vanished singular values are completed so U^T U = V^T V = I always holds.
struct Svd {
  Matrix u;                   // m x k, k = min(rows, cols)
  std::vector<double> sigma;  // length k, non-increasing, >= 0
  Matrix v;                   // n x k
};
Svd svd(const Matrix& m);

// Moore-Penrose pseudoinverse; singular values below rank_tol * sigma_max
// are treated as zero.
Matrix pinv(const Matrix& m, double rank_tol = 1e-10);

// Eigenvalues of a symmetric matrix (symmetrized internally), ascending.
std::vector<double> sym_eigenvalues(const Matrix& s);
double min_eig_sym(const Matrix& s);

// Full symmetric eigendecomposition S = V diag(values) V^T.
struct SymEig {
  std::vector<double> values;  // ascending
  Matrix vectors;              // columns are eigenvectors
};
SymEig sym_eig(const Matrix& s);

// Householder QR of a square matrix, A = Q R with square Q.
struct Qr {
  Matrix q;
  Matrix r;
};
Qr qr(const Matrix& a);

// Haar-ish orthogonal sample: QR of a seeded Gaussian with the signs of
// diag(R) fixed positive, so the draw is deterministic per seed.
Matrix random_orthogonal(int n, uint64_t seed);

// Extends a matrix with orthonormal columns to a square orthogonal matrix.
// Columns of u are preserved verbatim in the leading positions.
Matrix complete_basis(const Matrix& u);

}  // namespace lbnet
