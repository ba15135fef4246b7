#include "lbnet/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include "lbnet/rng.hpp"

namespace lbnet {

namespace {

template <typename T>
double abs_of(const T& v) {
  return std::abs(v);
}

constexpr double kPivotRel = 1e-12;

}  // namespace

template <typename T>
LuFactor<T> lu_factor(const Mat<T>& a) {
  detail::require(a.rows == a.cols, ErrorKind::Dimension, "lu_factor: matrix must be square");
  const int n = a.rows;
  LuFactor<T> f;
  f.lu = a;
  f.perm.resize(n);
  std::iota(f.perm.begin(), f.perm.end(), 0);

  const double scale = max_abs(a);
  const double floor_pivot = kPivotRel * (scale > 0.0 ? scale : 1.0);
  f.min_pivot = std::numeric_limits<double>::infinity();
  f.max_pivot = 0.0;

  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = abs_of(f.lu(k, k));
    for (int i = k + 1; i < n; ++i) {
      const double cand = abs_of(f.lu(i, k));
      if (cand > best) {
        best = cand;
        piv = i;
      }
    }
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(piv, j));
      std::swap(f.perm[k], f.perm[piv]);
    }
    const T pivot = f.lu(k, k);
    const double pabs = abs_of(pivot);
    f.min_pivot = std::min(f.min_pivot, pabs);
    f.max_pivot = std::max(f.max_pivot, pabs);
    if (pabs <= floor_pivot) {
      f.singular = true;
      if (pabs == 0.0) continue;  // leave the column; solve() refuses anyway
    }
    for (int i = k + 1; i < n; ++i) {
      const T m = f.lu(i, k) / pivot;
      f.lu(i, k) = m;
      if (m == T{}) continue;
      for (int j = k + 1; j < n; ++j) f.lu(i, j) -= m * f.lu(k, j);
    }
  }
  if (n == 0) f.min_pivot = 0.0;
  return f;
}

template <typename T>
Mat<T> LuFactor<T>::solve(const Mat<T>& b) const {
  const int n = lu.rows;
  detail::require(b.rows == n, ErrorKind::Dimension, "lu solve: rhs rows do not match");
  detail::require(!singular, ErrorKind::Singular, "lu solve: matrix is singular to working precision");
  Mat<T> x(n, b.cols);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < b.cols; ++j) x(i, j) = b(perm[i], j);
  // forward substitution with unit lower triangle
  for (int i = 1; i < n; ++i)
    for (int k = 0; k < i; ++k) {
      const T m = lu(i, k);
      if (m == T{}) continue;
      for (int j = 0; j < b.cols; ++j) x(i, j) -= m * x(k, j);
    }
  // back substitution
  for (int i = n - 1; i >= 0; --i) {
    for (int k = i + 1; k < n; ++k) {
      const T m = lu(i, k);
      if (m == T{}) continue;
      for (int j = 0; j < b.cols; ++j) x(i, j) -= m * x(k, j);
    }
    const T d = lu(i, i);
    for (int j = 0; j < b.cols; ++j) x(i, j) /= d;
  }
  return x;
}

// A = P^T L U, so A^T = U^T L^T P: solve U^T z = b, then L^T w = z, then
// x = P^T w.
template <typename T>
Mat<T> LuFactor<T>::solve_transposed(const Mat<T>& b) const {
  const int n = lu.rows;
  detail::require(b.rows == n, ErrorKind::Dimension, "lu solve_transposed: rhs rows do not match");
  detail::require(!singular, ErrorKind::Singular,
                  "lu solve_transposed: matrix is singular to working precision");
  Mat<T> z = b;
  // U^T is lower triangular with diagonal of U
  for (int i = 0; i < n; ++i) {
    const T d = lu(i, i);
    for (int j = 0; j < b.cols; ++j) z(i, j) /= d;
    for (int k = i + 1; k < n; ++k) {
      const T m = lu(i, k);  // (U^T)(k,i)
      if (m == T{}) continue;
      for (int j = 0; j < b.cols; ++j) z(k, j) -= m * z(i, j);
    }
  }
  // L^T is unit upper triangular
  for (int i = n - 1; i >= 0; --i)
    for (int k = i + 1; k < n; ++k) {
      const T m = lu(k, i);  // (L^T)(i,k)
      if (m == T{}) continue;
      for (int j = 0; j < b.cols; ++j) z(i, j) -= m * z(k, j);
    }
  Mat<T> x(n, b.cols);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < b.cols; ++j) x(perm[i], j) = z(i, j);
  return x;
}

template struct LuFactor<double>;
template struct LuFactor<std::complex<double>>;
template LuFactor<double> lu_factor(const Mat<double>&);
template LuFactor<std::complex<double>> lu_factor(const Mat<std::complex<double>>&);

namespace {

template <typename T>
Mat<T> solve_impl(const Mat<T>& a, const Mat<T>& b) {
  detail::require(a.rows == a.cols, ErrorKind::Dimension, "solve: matrix must be square");
  detail::require(a.rows == b.rows, ErrorKind::Dimension, "solve: rhs rows do not match");
  auto f = lu_factor(a);
  Mat<T> x = f.solve(b);
  // one round of iterative refinement keeps the residual near roundoff
  Mat<T> r = b - matmul(a, x);
  if (max_abs(r) > 0.0) x = x + f.solve(r);
  return x;
}

}  // namespace

Matrix solve(const Matrix& a, const Matrix& b) { return solve_impl(a, b); }
ComplexMatrix solve(const ComplexMatrix& a, const ComplexMatrix& b) { return solve_impl(a, b); }

double spectral_norm(const Matrix& m, double tol, int max_iters, uint64_t seed) {
  if (m.empty()) return 0.0;
  double last = 0.0;
  for (int attempt = 0; attempt < 2; ++attempt) {
    Rng rng(seed + 0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(attempt));
    Matrix v = rng.normal_matrix(m.cols, 1);
    double nv = frobenius_norm(v);
    if (nv == 0.0) {
      v = Matrix::zeros(m.cols, 1);
      v(0, 0) = 1.0;
      nv = 1.0;
    }
    for (auto& e : v.data) e /= nv;

    double sigma_prev = -1.0;
    int stable = 0;
    bool null_hit = false;
    for (int it = 0; it < max_iters; ++it) {
      Matrix u = matmul(m, v);
      const double sigma = frobenius_norm(u);
      if (sigma == 0.0) {
        null_hit = true;  // start vector fell in the kernel; retry once
        break;
      }
      Matrix w = matmul(transpose(m), u);
      const double nw = frobenius_norm(w);
      if (std::abs(sigma - sigma_prev) <= tol * std::max(sigma, 1e-300)) {
        if (++stable >= 3) return sigma;
      } else {
        stable = 0;
      }
      sigma_prev = sigma;
      last = sigma;
      if (nw == 0.0) return sigma;
      for (int i = 0; i < w.rows; ++i) v(i, 0) = w(i, 0) / nw;
    }
    if (null_hit && attempt == 1) return 0.0;
    if (null_hit) continue;
    if (attempt == 1)
      throw ConvergenceError("spectral_norm: power iteration did not stabilize", last);
  }
  return 0.0;  // both seeded starts landed in the kernel: the matrix is zero
}

namespace {

// Gram-Schmidt (twice) a fresh direction against the k leading columns of u.
bool orthonormalize_against(Matrix& u, int k, Matrix& cand) {
  for (int pass = 0; pass < 2; ++pass) {
    for (int j = 0; j < k; ++j) {
      double dot = 0.0;
      for (int i = 0; i < u.rows; ++i) dot += u(i, j) * cand(i, 0);
      for (int i = 0; i < u.rows; ++i) cand(i, 0) -= dot * u(i, j);
    }
  }
  const double n = frobenius_norm(cand);
  if (n < 1e-6) return false;
  for (int i = 0; i < cand.rows; ++i) cand(i, 0) /= n;
  return true;
}

}  // namespace

Svd svd(const Matrix& m) {
  const bool flip = m.rows < m.cols;  // one-sided Jacobi wants tall input
  Matrix g = flip ? transpose(m) : m;
  const int rows = g.rows, n = g.cols;

  Matrix v = Matrix::identity(n);
  const double eps = 1e-15;
  bool rotated = true;
  for (int sweep = 0; sweep < 64 && rotated; ++sweep) {
    rotated = false;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (int i = 0; i < rows; ++i) {
          app += g(i, p) * g(i, p);
          aqq += g(i, q) * g(i, q);
          apq += g(i, p) * g(i, q);
        }
        if (std::abs(apq) <= eps * std::sqrt(app * aqq) || apq == 0.0) continue;
        rotated = true;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (int i = 0; i < rows; ++i) {
          const double gp = g(i, p), gq = g(i, q);
          g(i, p) = c * gp - s * gq;
          g(i, q) = s * gp + c * gq;
        }
        for (int i = 0; i < n; ++i) {
          const double vp = v(i, p), vq = v(i, q);
          v(i, p) = c * vp - s * vq;
          v(i, q) = s * vp + c * vq;
        }
      }
    }
  }

  std::vector<double> sigma(n);
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < rows; ++i) s += g(i, j) * g(i, j);
    sigma[j] = std::sqrt(s);
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return sigma[a] > sigma[b]; });

  Matrix u(rows, n);
  Matrix vs(n, n);
  std::vector<double> sig(n);
  std::vector<int> missing;
  for (int j = 0; j < n; ++j) {
    const int src = order[j];
    sig[j] = sigma[src];
    for (int i = 0; i < n; ++i) vs(i, j) = v(i, src);
    if (sigma[src] > 1e-280) {
      for (int i = 0; i < rows; ++i) u(i, j) = g(i, src) / sigma[src];
    } else {
      sig[j] = 0.0;
      missing.push_back(j);
    }
  }
  // complete left vectors for vanished singular values so U stays orthonormal
  for (int j : missing) {
    Matrix cand(rows, 1);
    bool ok = false;
    for (int c = 0; c < rows && !ok; ++c) {
      for (int i = 0; i < rows; ++i) cand(i, 0) = (i == c) ? 1.0 : 0.0;
      // skip columns already used for earlier completions
      Matrix probe = cand;
      ok = orthonormalize_against(u, j, probe);
      if (ok) cand = probe;
    }
    if (!ok) {
      Rng rng(0x5bd1e995);
      for (int tries = 0; tries < 32 && !ok; ++tries) {
        cand = rng.normal_matrix(rows, 1);
        ok = orthonormalize_against(u, j, cand);
      }
      detail::require(ok, ErrorKind::Internal, "svd: could not complete an orthonormal basis");
    }
    for (int i = 0; i < rows; ++i) u(i, j) = cand(i, 0);
  }

  Svd out;
  if (flip) {
    out.u = vs;
    out.v = u;
  } else {
    out.u = u;
    out.v = vs;
  }
  out.sigma = sig;
  return out;
}

Matrix pinv(const Matrix& m, double rank_tol) {
  if (m.empty()) return transpose(m);
  Svd s = svd(m);
  const double smax = s.sigma.empty() ? 0.0 : s.sigma.front();
  const double thr = rank_tol * smax;
  const int k = static_cast<int>(s.sigma.size());
  Matrix core(k, k);
  for (int i = 0; i < k; ++i) core(i, i) = (s.sigma[i] > thr && s.sigma[i] > 0.0) ? 1.0 / s.sigma[i] : 0.0;
  return matmul(s.v, matmul(core, transpose(s.u)));
}

namespace {

// Householder tridiagonalization + QL with implicit shifts (the EISPACK
// tred2/tql2 pair). Vectors are always accumulated; the extra O(n^3) is
// immaterial at the orders this library sees.
void tridiag_ql(Matrix& v, std::vector<double>& d) {
  const int n = v.rows;
  d.assign(n, 0.0);
  std::vector<double> e(n, 0.0);
  if (n == 0) return;

  for (int j = 0; j < n; ++j) d[j] = v(n - 1, j);

  for (int i = n - 1; i > 0; --i) {
    double scale = 0.0, h = 0.0;
    for (int k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (int j = 0; j < i; ++j) {
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
        v(j, i) = 0.0;
      }
    } else {
      for (int k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = (f > 0.0) ? -std::sqrt(h) : std::sqrt(h);
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (int j = 0; j < i; ++j) e[j] = 0.0;
      for (int j = 0; j < i; ++j) {
        f = d[j];
        v(j, i) = f;
        g = e[j] + v(j, j) * f;
        for (int k = j + 1; k <= i - 1; ++k) {
          g += v(k, j) * d[k];
          e[k] += v(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (int j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (int j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (int j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (int k = j; k <= i - 1; ++k) v(k, j) -= (f * e[k] + g * d[k]);
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
      }
    }
    d[i] = h;
  }

  for (int i = 0; i < n - 1; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (int k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
      for (int j = 0; j <= i; ++j) {
        double g = 0.0;
        for (int k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (int k = 0; k <= i; ++k) v(k, j) -= g * d[k];
      }
    }
    for (int k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
  }
  for (int j = 0; j < n; ++j) {
    d[j] = v(n - 1, j);
    v(n - 1, j) = 0.0;
  }
  v(n - 1, n - 1) = 1.0;
  e[0] = 0.0;

  // QL stage
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  double f = 0.0, tst1 = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (int l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    int m = l;
    while (m < n && std::abs(e[m]) > eps * tst1) ++m;
    if (m > l) {
      int iter = 0;
      do {
        detail::require(++iter <= 60, ErrorKind::Convergence,
                        "sym_eig: QL iteration did not converge");
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0.0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (int i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0, c2 = c, c3 = c;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (int i = m - 1; i >= l; --i) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = std::hypot(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          for (int k = 0; k < n; ++k) {
            h = v(k, i + 1);
            v(k, i + 1) = s * v(k, i) + c * h;
            v(k, i) = c * v(k, i) - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }

  // ascending order
  for (int i = 0; i < n - 1; ++i) {
    int k = i;
    double p = d[i];
    for (int j = i + 1; j < n; ++j)
      if (d[j] < p) {
        k = j;
        p = d[j];
      }
    if (k != i) {
      d[k] = d[i];
      d[i] = p;
      for (int j = 0; j < n; ++j) std::swap(v(j, i), v(j, k));
    }
  }
}

Matrix symmetrized(const Matrix& s) {
  detail::require(s.rows == s.cols, ErrorKind::Dimension, "symmetric eig: matrix must be square");
  Matrix a = s;
  for (int i = 0; i < s.rows; ++i)
    for (int j = i + 1; j < s.cols; ++j) {
      const double m = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = m;
      a(j, i) = m;
    }
  return a;
}

}  // namespace

std::vector<double> sym_eigenvalues(const Matrix& s) {
  Matrix a = symmetrized(s);
  std::vector<double> d;
  tridiag_ql(a, d);
  return d;
}

double min_eig_sym(const Matrix& s) {
  auto d = sym_eigenvalues(s);
  detail::require(!d.empty(), ErrorKind::Dimension, "min_eig_sym: empty matrix");
  return d.front();
}

SymEig sym_eig(const Matrix& s) {
  SymEig out;
  out.vectors = symmetrized(s);
  tridiag_ql(out.vectors, out.values);
  return out;
}

Qr qr(const Matrix& a) {
  detail::require(a.rows == a.cols, ErrorKind::Dimension, "qr: matrix must be square");
  const int n = a.rows;
  Matrix r = a;
  Matrix q = Matrix::identity(n);
  std::vector<double> w(n);
  for (int k = 0; k < n - 1; ++k) {
    double norm = 0.0;
    for (int i = k; i < n; ++i) norm += r(i, k) * r(i, k);
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    const double alpha = (r(k, k) > 0.0) ? -norm : norm;
    double vnorm2 = 0.0;
    for (int i = k; i < n; ++i) {
      w[i] = r(i, k);
      if (i == k) w[i] -= alpha;
      vnorm2 += w[i] * w[i];
    }
    if (vnorm2 == 0.0) continue;
    // apply H = I - 2 w w^T / |w|^2 to R (left) and accumulate into Q (right)
    for (int j = k; j < n; ++j) {
      double dot = 0.0;
      for (int i = k; i < n; ++i) dot += w[i] * r(i, j);
      const double f = 2.0 * dot / vnorm2;
      for (int i = k; i < n; ++i) r(i, j) -= f * w[i];
    }
    for (int i = 0; i < n; ++i) {
      double dot = 0.0;
      for (int j = k; j < n; ++j) dot += q(i, j) * w[j];
      const double f = 2.0 * dot / vnorm2;
      for (int j = k; j < n; ++j) q(i, j) -= f * w[j];
    }
  }
  return {q, r};
}

Matrix random_orthogonal(int n, uint64_t seed) {
  detail::require(n > 0, ErrorKind::Dimension, "random_orthogonal: order must be positive");
  Rng rng(seed);
  Matrix g = rng.normal_matrix(n, n);
  Qr f = qr(g);
  for (int j = 0; j < n; ++j)
    if (f.r(j, j) < 0.0)
      for (int i = 0; i < n; ++i) f.q(i, j) = -f.q(i, j);
  return f.q;
}

Matrix complete_basis(const Matrix& u) {
  const int m = u.rows, k = u.cols;
  detail::require(k <= m, ErrorKind::Dimension, "complete_basis: more columns than rows");
  Matrix out(m, m);
  set_block(out, 0, 0, u);
  int have = k;
  for (int c = 0; c < m && have < m; ++c) {
    Matrix cand(m, 1);
    cand(c, 0) = 1.0;
    if (orthonormalize_against(out, have, cand)) {
      for (int i = 0; i < m; ++i) out(i, have) = cand(i, 0);
      ++have;
    }
  }
  Rng rng(0x2545f4914f6cdd1dULL);
  while (have < m) {
    Matrix cand = rng.normal_matrix(m, 1);
    if (orthonormalize_against(out, have, cand)) {
      for (int i = 0; i < m; ++i) out(i, have) = cand(i, 0);
      ++have;
    }
  }
  return out;
}

}  // namespace lbnet
