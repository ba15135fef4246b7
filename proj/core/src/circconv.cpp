#include "lbnet/circconv.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lbnet/fft.hpp"
#include "lbnet/linalg.hpp"

namespace lbnet {

namespace {

constexpr double kImagHard = 1e-6;      // beyond this the spectra were inconsistent
constexpr double kPivotRatio = 1e-10;   // conditioning guard on each bin's solve
const double kSqrt2 = std::sqrt(2.0);

void validate(const ConvParams& cp) {
  detail::require(cp.p.shape[2] == cp.p.shape[3] && cp.p.shape[2] >= 1, ErrorKind::Dimension,
                  "conv_realize: spatial grid must be square");
  detail::require(cp.p.shape[1] >= 1 && cp.p.shape[0] > cp.p.shape[1], ErrorKind::Dimension,
                  "conv_realize: parameter tensor must stack cout + cin channel rows");
  detail::require(cp.d.rows == cp.cout() && cp.d.cols == 1, ErrorKind::Dimension,
                  "conv_realize: d must have one entry per output channel");
  detail::require(cp.b.rows == cp.cout() && cp.b.cols == 1, ErrorKind::Dimension,
                  "conv_realize: bias must have one entry per output channel");
  detail::require(is_finite(cp.d) && is_finite(cp.b), ErrorKind::Domain,
                  "conv_realize: parameters must be finite");
  for (double v : cp.p.data)
    detail::require(std::isfinite(v), ErrorKind::Domain, "conv_realize: parameters must be finite");
}

void check_imag(double residual, const char* where) {
  detail::require(residual <= kImagHard, ErrorKind::Internal,
                  std::string("conv_forward: inverse transform of ") + where +
                      " is not real (conjugate symmetry violated)");
}

}  // namespace

SpectrumCache conv_realize(const ConvParams& cp, BinMode mode) {
  validate(cp);
  const int s = cp.grid(), q = cp.cout(), p = cp.cin();

  SpectrumCache sc;
  sc.s = s;
  sc.cin = p;
  sc.cout = q;
  sc.psi = Matrix(q, 1);
  for (int i = 0; i < q; ++i) sc.psi(i, 0) = std::exp(cp.d(i, 0));
  sc.bias = cp.b;
  sc.a.assign(static_cast<size_t>(s) * s, ComplexMatrix());
  sc.b.assign(static_cast<size_t>(s) * s, ComplexMatrix());

  const CTensor4 pf = fft2_batch(cp.p);

  auto realize_bin = [&](int i, int j) {
    ComplexMatrix x(q, q), y(p, q);
    for (int r = 0; r < q; ++r)
      for (int c = 0; c < q; ++c) x(r, c) = pf(r, c, i, j);
    for (int r = 0; r < p; ++r)
      for (int c = 0; c < q; ++c) y(r, c) = pf(q + r, c, i, j);

    ComplexMatrix z = (x - conj_transpose(x)) + matmul(conj_transpose(y), y);
    for (int r = 0; r < q; ++r) z(r, r) += 1.0;
    const auto f = lu_factor(z);
    detail::require(!f.singular && f.min_pivot >= kPivotRatio * f.max_pivot, ErrorKind::Singular,
                    "conv_realize: ill-conditioned solve at bin (" + std::to_string(i) + ", " +
                        std::to_string(j) + ")");

    ComplexCayleyFactors cf = cayley(x, y);
    sc.a[static_cast<size_t>(i) * s + j] = std::move(cf.a);
    sc.b[static_cast<size_t>(i) * s + j] = std::move(cf.b);
  };

  if (mode == BinMode::Full) {
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j) realize_bin(i, j);
    return sc;
  }

  // the spectra of real parameters satisfy bin(-i, -j) = conj(bin(i, j)),
  // and the transform commutes with conjugation, so only the left half of
  // the columns needs the solve; the rest is mirrored.
  const int half = s / 2;
  for (int i = 0; i < s; ++i)
    for (int j = 0; j <= half; ++j) realize_bin(i, j);
  for (int i = 0; i < s; ++i)
    for (int j = half + 1; j < s; ++j) {
      const int mi = (s - i) % s, mj = (s - j) % s;
      const ComplexMatrix& sa = sc.a[static_cast<size_t>(mi) * s + mj];
      const ComplexMatrix& sb = sc.b[static_cast<size_t>(mi) * s + mj];
      ComplexMatrix ca = sa, cb = sb;
      for (auto& v : ca.data) v = std::conj(v);
      for (auto& v : cb.data) v = std::conj(v);
      sc.a[static_cast<size_t>(i) * s + j] = std::move(ca);
      sc.b[static_cast<size_t>(i) * s + j] = std::move(cb);
    }
  return sc;
}

Tensor4 conv_forward(const SpectrumCache& sc, const Tensor4& h, Activation act,
                     double* max_imag) {
  const int s = sc.s, p = sc.cin, q = sc.cout;
  detail::require(h.shape[1] == p && h.shape[2] == s && h.shape[3] == s, ErrorKind::Dimension,
                  "conv_forward: input shape mismatch");
  const int batch = h.shape[0];
  Tensor4 out(batch, q, s, s);
  double worst_imag = 0.0;

  for (int n = 0; n < batch; ++n) {
    Tensor4 sample(1, p, s, s);
    for (int c = 0; c < p; ++c)
      for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) sample(0, c, i, j) = h(n, c, i, j);
    CTensor4 hf = fft2_batch(sample);

    // pre-activation: per bin sqrt(2) Psi^{-1} B~ h~
    CTensor4 tf(1, q, s, s);
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j) {
        const ComplexMatrix& bb = sc.b[static_cast<size_t>(i) * s + j];
        for (int r = 0; r < q; ++r) {
          std::complex<double> acc(0.0, 0.0);
          for (int c = 0; c < p; ++c) acc += bb(r, c) * hf(0, c, i, j);
          tf(0, r, i, j) = acc * (kSqrt2 / sc.psi(r, 0));
        }
      }

    double resid = 0.0;
    Tensor4 t = ifft2_real_batch(tf, &resid);
    check_imag(resid, "the pre-activation");
    worst_imag = std::max(worst_imag, resid);

    for (int c = 0; c < q; ++c)
      for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j)
          t(0, c, i, j) = activate(act, t(0, c, i, j) + sc.bias(c, 0));

    CTensor4 uf = fft2_batch(t);

    // post-activation: per bin sqrt(2) A~* Psi u~
    CTensor4 of(1, q, s, s);
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < s; ++j) {
        const ComplexMatrix& aa = sc.a[static_cast<size_t>(i) * s + j];
        for (int r = 0; r < q; ++r) {
          std::complex<double> acc(0.0, 0.0);
          for (int c = 0; c < q; ++c)
            acc += std::conj(aa(c, r)) * (sc.psi(c, 0) * uf(0, c, i, j));
          of(0, r, i, j) = acc * kSqrt2;
        }
      }

    Tensor4 o = ifft2_real_batch(of, &resid);
    check_imag(resid, "the output");
    worst_imag = std::max(worst_imag, resid);
    for (int c = 0; c < q; ++c)
      for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) out(n, c, i, j) = o(0, c, i, j);
  }
  if (max_imag) *max_imag = worst_imag;
  return out;
}

namespace {

// Spatial kernels of a per-bin multiplier stack: kernel = ifft2(M) / s^2,
// where M(i,j) collects the (r, c) entry across bins.
Tensor4 kernels_from_bins(const std::vector<ComplexMatrix>& bins, int rows, int cols, int s) {
  CTensor4 m(rows, cols, s, s);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) {
      const ComplexMatrix& bm = bins[static_cast<size_t>(i) * s + j];
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c, i, j) = bm(r, c);
    }
  double resid = 0.0;
  Tensor4 k = ifft2_real_batch(m, &resid);
  detail::require(resid <= kImagHard, ErrorKind::Internal,
                  "conv_dense_oracle: spectra do not invert to real kernels");
  const double scale = 1.0 / (static_cast<double>(s) * s);
  for (auto& v : k.data) v *= scale;
  return k;
}

// C[(r, m, n), (c, u, v)] = kernel[r, c, (m - u) mod s, (n - v) mod s]
Matrix circulant_from_kernels(const Tensor4& k) {
  const int rows = k.shape[0], cols = k.shape[1], s = k.shape[2];
  Matrix c(rows * s * s, cols * s * s);
  for (int r = 0; r < rows; ++r)
    for (int m = 0; m < s; ++m)
      for (int n = 0; n < s; ++n) {
        const int row = (r * s + m) * s + n;
        for (int cc = 0; cc < cols; ++cc)
          for (int u = 0; u < s; ++u)
            for (int v = 0; v < s; ++v)
              c(row, (cc * s + u) * s + v) = k(r, cc, (m - u + s) % s, (n - v + s) % s);
      }
  return c;
}

}  // namespace

DenseConvOperators conv_dense_oracle(const SpectrumCache& sc) {
  detail::require(sc.s <= 8, ErrorKind::Domain,
                  "conv_dense_oracle: refusing grids above 8 (dense cross-check only)");
  DenseConvOperators ops;
  ops.c_a = circulant_from_kernels(kernels_from_bins(sc.a, sc.cout, sc.cout, sc.s));
  ops.c_b = circulant_from_kernels(kernels_from_bins(sc.b, sc.cout, sc.cin, sc.s));
  return ops;
}

Matrix conv_dense_forward(const DenseConvOperators& ops, const SpectrumCache& sc,
                          const Matrix& vec_h, Activation act) {
  const int s2 = sc.s * sc.s;
  detail::require(vec_h.rows == sc.cin * s2, ErrorKind::Dimension,
                  "conv_dense_forward: input length mismatch");
  Matrix u = matmul(ops.c_b, vec_h);
  for (int i = 0; i < u.rows; ++i) {
    const int channel = i / s2;
    const double scale = kSqrt2 / sc.psi(channel, 0);
    for (int j = 0; j < u.cols; ++j)
      u(i, j) = activate(act, u(i, j) * scale + sc.bias(channel, 0));
  }
  for (int i = 0; i < u.rows; ++i) {
    const double scale = sc.psi(i / s2, 0);
    for (int j = 0; j < u.cols; ++j) u(i, j) *= scale;
  }
  return kSqrt2 * matmul(transpose(ops.c_a), u);
}

}  // namespace lbnet
