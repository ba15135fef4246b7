#pragma once

#include <utility>

#include "lbnet/matrix.hpp"

namespace lbnet {

// Orthogonal pair produced by the transform: A is m x m, B is m x n, and
// A A^T + B B^T = I exactly (up to roundoff) for any input.
struct CayleyFactors {
  Matrix a;
  Matrix b;
};

// Complex counterpart, A A^* + B B^* = I per slice; used for the per-bin
// factors of circular convolutions.
struct ComplexCayleyFactors {
  ComplexMatrix a;
  ComplexMatrix b;
};

// X is m x m (only its skew part matters), Y is n x m:
//   Z = X - X^T + Y^T Y
//   A^T = (I + Z)^{-1} (I - Z),   B^T = -2 Y (I + Z)^{-1}.
// I + Z is always invertible since the symmetric part of Z is Y^T Y >= 0.
CayleyFactors cayley(const Matrix& x, const Matrix& y);
ComplexCayleyFactors cayley(const ComplexMatrix& x, const ComplexMatrix& y);

// Recovers the canonical parameters (X strictly lower triangular) that the
// forward transform maps back onto (A, B). Defined whenever (A, B) is an
// orthogonal pair and A has no eigenvalue at -1; that degeneracy is
// detected through the pivots of I + A^T and reported as an error.
std::pair<Matrix, Matrix> inverse_cayley(const Matrix& a, const Matrix& b);

}  // namespace lbnet
