#include "lbnet/fft.hpp"

#include <cmath>
#include <complex>
#include <vector>

namespace lbnet {

namespace {

using cd = std::complex<double>;
constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2, unnormalized, kernel exp(sign * 2*pi*i*k/n).
void fft_pow2(std::vector<cd>& a, int sign) {
  const int n = static_cast<int>(a.size());
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const double ang = sign * kTwoPi / len;
    const cd wl(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      cd w(1.0);
      for (int k = 0; k < len / 2; ++k) {
        const cd u = a[i + k];
        const cd v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// Unnormalized DFT of arbitrary length via the chirp-z (Bluestein) identity:
// the length-n transform becomes a circular convolution of length >= 2n-1,
// evaluated with radix-2 transforms.
void fft_bluestein(std::vector<cd>& a, int sign) {
  const int n = static_cast<int>(a.size());
  int m = 1;
  while (m < 2 * n - 1) m <<= 1;

  std::vector<cd> w(n);  // w[k] = exp(sign * pi * i * k^2 / n)
  for (int k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the angle argument bounded
    const long long k2 = (1LL * k * k) % (2LL * n);
    const double ang = sign * kTwoPi * 0.5 * static_cast<double>(k2) / n;
    w[k] = cd(std::cos(ang), std::sin(ang));
  }

  std::vector<cd> x(m, cd(0.0)), h(m, cd(0.0));
  for (int k = 0; k < n; ++k) x[k] = a[k] * w[k];
  h[0] = std::conj(w[0]);
  for (int k = 1; k < n; ++k) {
    h[k] = std::conj(w[k]);
    h[m - k] = std::conj(w[k]);
  }
  fft_pow2(x, -1);
  fft_pow2(h, -1);
  for (int k = 0; k < m; ++k) x[k] *= h[k];
  fft_pow2(x, +1);
  const double inv_m = 1.0 / m;
  for (int k = 0; k < n; ++k) a[k] = w[k] * x[k] * inv_m;
}

void dft1d(std::vector<cd>& a, int sign) {
  if (a.size() <= 1) return;
  if (is_pow2(static_cast<int>(a.size())))
    fft_pow2(a, sign);
  else
    fft_bluestein(a, sign);
}

// Applies the unnormalized length-s kernel down the columns (axis 2) and
// along the rows (axis 3) of every slice; col_sign / row_sign pick the
// kernel orientation per axis.
void transform_slices(CTensor4& t, int col_sign, int row_sign, double scale) {
  const int c0 = t.shape[0], c1 = t.shape[1], s = t.shape[2];
  std::vector<cd> buf(s);
  for (int a = 0; a < c0; ++a)
    for (int b = 0; b < c1; ++b) {
      for (int j = 0; j < s; ++j) {  // columns
        for (int i = 0; i < s; ++i) buf[i] = t(a, b, i, j);
        dft1d(buf, col_sign);
        for (int i = 0; i < s; ++i) t(a, b, i, j) = buf[i];
      }
      for (int i = 0; i < s; ++i) {  // rows
        for (int j = 0; j < s; ++j) buf[j] = t(a, b, i, j);
        dft1d(buf, row_sign);
        for (int j = 0; j < s; ++j) t(a, b, i, j) = buf[j];
      }
      if (scale != 1.0)
        for (int i = 0; i < s; ++i)
          for (int j = 0; j < s; ++j) t(a, b, i, j) *= scale;
    }
}

void require_square_grid(const std::array<int, 4>& shape) {
  detail::require(shape[2] == shape[3], ErrorKind::Dimension,
                  "fft2: spatial grid must be square");
  detail::require(shape[2] >= 1, ErrorKind::Dimension, "fft2: grid size must be positive");
}

}  // namespace

CTensor4 fft2_batch(const CTensor4& x) {
  require_square_grid(x.shape);
  CTensor4 t = x;
  const double s = static_cast<double>(x.shape[2]);
  // x_hat = F x F*: forward kernel over rows-index, conjugate kernel over
  // columns-index, 1/s from each factor.
  transform_slices(t, -1, +1, 1.0 / (s * s));
  return t;
}

CTensor4 fft2_batch(const Tensor4& x) {
  require_square_grid(x.shape);
  CTensor4 t(x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
  for (size_t i = 0; i < x.data.size(); ++i) t.data[i] = cd(x.data[i], 0.0);
  const double s = static_cast<double>(x.shape[2]);
  transform_slices(t, -1, +1, 1.0 / (s * s));
  return t;
}

CTensor4 ifft2_batch(const CTensor4& x) {
  require_square_grid(x.shape);
  CTensor4 t = x;
  // inverse of the two-sided transform: conjugate kernel over the
  // rows-index, forward kernel over the columns-index, no scaling.
  transform_slices(t, +1, -1, 1.0);
  return t;
}

Tensor4 ifft2_real_batch(const CTensor4& x, double* max_imag) {
  CTensor4 t = ifft2_batch(x);
  Tensor4 out(t.shape[0], t.shape[1], t.shape[2], t.shape[3]);
  double worst = 0.0;
  for (size_t i = 0; i < t.data.size(); ++i) {
    out.data[i] = t.data[i].real();
    worst = std::max(worst, std::abs(t.data[i].imag()));
  }
  if (max_imag) *max_imag = worst;
  return out;
}

}  // namespace lbnet
