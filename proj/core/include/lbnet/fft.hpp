#pragma once

#include "lbnet/matrix.hpp"

namespace lbnet {

// 2-D transforms of every trailing s-by-s slice of a rank-4 batch, in the
// two-sided normalization
//
//   x_hat = F x F*,   F[i,j] = (1/s) * exp(-2*pi*i_unit*i*j/s),
//
// so the transform of a real slice is conjugate-symmetric under
// (i, j) -> (-i mod s, -j mod s) and || x_hat ||_F = || x ||_F / s.
// The spatial grid must be square; arbitrary s is supported (power-of-two
// stages with a Bluestein fallback for the rest).
CTensor4 fft2_batch(const Tensor4& x);
CTensor4 fft2_batch(const CTensor4& x);

// Exact inverse of fft2_batch.
CTensor4 ifft2_batch(const CTensor4& x);

// Inverse transform of a spectrum that should be conjugate-symmetric:
// returns the real part and reports the largest imaginary magnitude seen,
// which is the caller's consistency check.
Tensor4 ifft2_real_batch(const CTensor4& x, double* max_imag = nullptr);

}  // namespace lbnet
