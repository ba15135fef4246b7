#include "lbnet/cayley.hpp"

#include "lbnet/linalg.hpp"

namespace lbnet {

namespace {

template <typename T, typename Factors>
Factors cayley_impl(const Mat<T>& x, const Mat<T>& y) {
  detail::require(x.rows == x.cols, ErrorKind::Dimension, "cayley: X must be square");
  detail::require(y.cols == x.cols, ErrorKind::Dimension,
                  "cayley: Y must have as many columns as X");
  const int m = x.rows;

  Mat<T> xt, yt;
  if constexpr (std::is_same_v<T, double>) {
    xt = transpose(x);
    yt = transpose(y);
  } else {
    xt = conj_transpose(x);
    yt = conj_transpose(y);
  }
  Mat<T> z = (x - xt) + matmul(yt, y);
  const Mat<T> eye = Mat<T>::identity(m);
  const Mat<T> ipz = eye + z;
  const Mat<T> imz = eye - z;

  Factors f;
  // A^T = (I+Z)^{-1}(I-Z); stored as A.
  Mat<T> at = solve(ipz, imz);
  // B^T = -2 Y (I+Z)^{-1}  =>  B = (I+Z)^{-T} (-2 Y^T)
  Mat<T> ipz_t;
  if constexpr (std::is_same_v<T, double>)
    ipz_t = transpose(ipz);
  else
    ipz_t = conj_transpose(ipz);
  Mat<T> b = solve(ipz_t, T(-2) * yt);

  if constexpr (std::is_same_v<T, double>)
    f.a = transpose(at);
  else
    f.a = conj_transpose(at);
  f.b = std::move(b);
  return f;
}

}  // namespace

CayleyFactors cayley(const Matrix& x, const Matrix& y) {
  return cayley_impl<double, CayleyFactors>(x, y);
}

ComplexCayleyFactors cayley(const ComplexMatrix& x, const ComplexMatrix& y) {
  return cayley_impl<std::complex<double>, ComplexCayleyFactors>(x, y);
}

std::pair<Matrix, Matrix> inverse_cayley(const Matrix& a, const Matrix& b) {
  detail::require(a.rows == a.cols, ErrorKind::Dimension, "inverse_cayley: A must be square");
  detail::require(b.rows == a.rows, ErrorKind::Dimension,
                  "inverse_cayley: B must have as many rows as A");
  const int m = a.rows;
  const Matrix eye = Matrix::identity(m);

  auto f = lu_factor(eye + transpose(a));
  // an eigenvalue of A at -1 collapses I + A^T; the pivot ratio is the
  // cheap stand-in for a condition number here
  const bool degenerate =
      f.singular || (f.max_pivot > 0.0 && f.min_pivot / f.max_pivot < 1e-10);
  detail::require(!degenerate, ErrorKind::NonInvertible,
                  "inverse_cayley: A has an eigenvalue at -1 (I + A^T is numerically singular)");

  // Z = (I - A^T)(I + A^T)^{-1}, computed as Z^T = (I + A)^{-1}(I - A)
  Matrix zt = f.solve_transposed(eye - a);
  Matrix z = transpose(zt);

  Matrix x(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < i; ++j) x(i, j) = 0.5 * (z(i, j) - z(j, i));
  Matrix y = -0.5 * matmul(transpose(b), eye + z);
  return {std::move(x), std::move(y)};
}

}  // namespace lbnet
