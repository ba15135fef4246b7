#pragma once

#include <vector>

#include "lbnet/activation.hpp"
#include "lbnet/cayley.hpp"
#include "lbnet/matrix.hpp"

namespace lbnet {

// Free parameters of one Lipschitz-bounded circular convolution layer on a
// square s-by-s grid: p holds the stacked spatial parameter tensor (the
// first cout channel rows parameterize X, the remaining cin rows Y), d the
// per-channel log-scales and b the per-channel bias.
struct ConvParams {
  Tensor4 p;  // (cout + cin, cout, s, s)
  Matrix d;   // cout x 1
  Matrix b;   // cout x 1

  int grid() const { return p.shape[2]; }
  int cout() const { return p.shape[1]; }
  int cin() const { return p.shape[0] - p.shape[1]; }
};

// Whether the per-bin factors are computed on every frequency bin or only
// on the non-redundant half (the rest filled in by conjugate symmetry,
// which the real-input spectra obey).
enum class BinMode { Full, Reduced };

// Realized spectra: one orthogonal pair per frequency bin, row-major over
// bins (i * s + j), plus the spatial-domain channel scales.
struct SpectrumCache {
  int s = 1;
  int cin = 0;
  int cout = 0;
  std::vector<ComplexMatrix> a;  // cout x cout per bin
  std::vector<ComplexMatrix> b;  // cout x cin per bin
  Matrix psi;                    // exp(d), cout x 1
  Matrix bias;                   // cout x 1
};

SpectrumCache conv_realize(const ConvParams& cp, BinMode mode = BinMode::Reduced);

// Sandwich layer in the frequency domain: per-bin multiplications around a
// spatial activation. h has shape (batch, cin, s, s); the result is
// (batch, cout, s, s). Intermediate inverse transforms must come out real;
// max_imag (when given) receives the worst imaginary residual seen, and a
// residual above 1e-6 trips an internal-consistency error.
Tensor4 conv_forward(const SpectrumCache& sc, const Tensor4& h, Activation act,
                     double* max_imag = nullptr);

// Dense materialization of the same layer: doubly-circulant operators
// assembled by index arithmetic from the spatial kernels of the per-bin
// factors. Satisfies C_A C_A^T + C_B C_B^T = I. Refuses grids above 8 (the
// dense matrices grow with s^4; this is a cross-check, not a fast path).
struct DenseConvOperators {
  Matrix c_a;  // (cout s^2) x (cout s^2)
  Matrix c_b;  // (cout s^2) x (cin s^2)
};
DenseConvOperators conv_dense_oracle(const SpectrumCache& sc);

// The explicit dense sandwich layer built from the oracle operators;
// vec_h is (cin s^2) x batch with channel-major (c, u, v) ordering, which
// matches the memory order of Tensor4 slices.
Matrix conv_dense_forward(const DenseConvOperators& ops, const SpectrumCache& sc,
                          const Matrix& vec_h, Activation act);

}  // namespace lbnet
