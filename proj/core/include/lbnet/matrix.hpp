#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "lbnet/error.hpp"

namespace lbnet {

// Dense row-major matrix. Vectors are n-by-1 matrices throughout the
// library; scalars produced by reductions are 1-by-1.
template <typename T>
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<T> data;  // row-major, rows*cols entries

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, T{}) {}

  static Mat zeros(int r, int c) { return Mat(r, c); }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  T& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  const T& operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

  bool empty() const { return rows == 0 || cols == 0; }
  size_t size() const { return data.size(); }
};

using Matrix = Mat<double>;
using ComplexMatrix = Mat<std::complex<double>>;

namespace detail {
inline void require(bool ok, ErrorKind kind, const std::string& msg) {
  if (!ok) throw Error(kind, msg);
}
}  // namespace detail

template <typename T>
Mat<T> operator+(const Mat<T>& a, const Mat<T>& b) {
  detail::require(a.rows == b.rows && a.cols == b.cols, ErrorKind::Dimension,
                  "matrix add: shapes do not match");
  Mat<T> c = a;
  for (size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
  return c;
}

template <typename T>
Mat<T> operator-(const Mat<T>& a, const Mat<T>& b) {
  detail::require(a.rows == b.rows && a.cols == b.cols, ErrorKind::Dimension,
                  "matrix sub: shapes do not match");
  Mat<T> c = a;
  for (size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
  return c;
}

template <typename T, typename S>
Mat<T> operator*(S s, const Mat<T>& a) {
  Mat<T> c = a;
  for (auto& v : c.data) v = T(s) * v;
  return c;
}

template <typename T>
Mat<T> matmul(const Mat<T>& a, const Mat<T>& b) {
  detail::require(a.cols == b.rows, ErrorKind::Dimension, "matmul: inner dimensions differ");
  Mat<T> c(a.rows, b.cols);
  const int n = a.rows, k = a.cols, m = b.cols;
  for (int i = 0; i < n; ++i) {
    T* ci = &c.data[static_cast<size_t>(i) * m];
    for (int p = 0; p < k; ++p) {
      const T aip = a(i, p);
      if (aip == T{}) continue;
      const T* bp = &b.data[static_cast<size_t>(p) * m];
      for (int j = 0; j < m; ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

template <typename T>
Mat<T> transpose(const Mat<T>& a) {
  Mat<T> c(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) c(j, i) = a(i, j);
  return c;
}

inline ComplexMatrix conj_transpose(const ComplexMatrix& a) {
  ComplexMatrix c(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) c(j, i) = std::conj(a(i, j));
  return c;
}

template <typename T>
double frobenius_norm(const Mat<T>& a) {
  double s = 0.0;
  for (const auto& v : a.data) {
    if constexpr (std::is_same_v<T, double>) {
      s += v * v;
    } else {
      s += std::norm(v);
    }
  }
  return std::sqrt(s);
}

template <typename T>
double max_abs(const Mat<T>& a) {
  double m = 0.0;
  for (const auto& v : a.data) m = std::max(m, std::abs(v));
  return m;
}

template <typename T>
bool is_finite(const Mat<T>& a) {
  for (const auto& v : a.data) {
    if constexpr (std::is_same_v<T, double>) {
      if (!std::isfinite(v)) return false;
    } else {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
  }
  return true;
}

// Writes block m into dst with top-left corner (i0, j0).
template <typename T>
void set_block(Mat<T>& dst, int i0, int j0, const Mat<T>& m) {
  detail::require(i0 >= 0 && j0 >= 0 && i0 + m.rows <= dst.rows && j0 + m.cols <= dst.cols,
                  ErrorKind::Dimension, "set_block: block exceeds target");
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) dst(i0 + i, j0 + j) = m(i, j);
}

template <typename T>
Mat<T> get_block(const Mat<T>& src, int i0, int j0, int r, int c) {
  detail::require(i0 >= 0 && j0 >= 0 && i0 + r <= src.rows && j0 + c <= src.cols,
                  ErrorKind::Dimension, "get_block: block exceeds source");
  Mat<T> m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = src(i0 + i, j0 + j);
  return m;
}

inline Matrix diag_from_vector(const Matrix& v) {
  detail::require(v.cols == 1, ErrorKind::Dimension, "diag_from_vector: expects a column vector");
  Matrix d(v.rows, v.rows);
  for (int i = 0; i < v.rows; ++i) d(i, i) = v(i, 0);
  return d;
}

// Batched rank-4 container, shape (c0, c1, s0, s1); the trailing two axes
// are the spatial grid for the circular-convolution routines.
template <typename T>
struct Tens4 {
  std::array<int, 4> shape{0, 0, 0, 0};
  std::vector<T> data;

  Tens4() = default;
  Tens4(int a, int b, int c, int d)
      : shape{a, b, c, d},
        data(static_cast<size_t>(a) * b * c * d, T{}) {}

  T& operator()(int a, int b, int c, int d) {
    return data[((static_cast<size_t>(a) * shape[1] + b) * shape[2] + c) * shape[3] + d];
  }
  const T& operator()(int a, int b, int c, int d) const {
    return data[((static_cast<size_t>(a) * shape[1] + b) * shape[2] + c) * shape[3] + d];
  }
};

using Tensor4 = Tens4<double>;
using CTensor4 = Tens4<std::complex<double>>;

}  // namespace lbnet
