#include "lbnet/converse.hpp"

#include <cmath>

#include "lbnet/cayley.hpp"
#include "lbnet/certify.hpp"
#include "lbnet/linalg.hpp"

namespace lbnet {

namespace {

constexpr double kPsdSlack = 1e-8;
constexpr int kMaxRedraws = 16;

// True when I + A^T is comfortably invertible, i.e. the inverse transform
// will accept A. Uses the same pivot-ratio estimate as the transform.
bool transform_safe(const Matrix& a, double threshold) {
  auto f = lu_factor(Matrix::identity(a.rows) + transpose(a));
  if (f.singular) return false;
  return f.max_pivot == 0.0 || f.min_pivot / f.max_pivot >= threshold;
}

// Symmetric PSD square root with a tolerance for slightly negative
// eigenvalues (clipped to zero); anything below -1e-8 is a genuine
// infeasibility.
Matrix sqrt_psd(const Matrix& s) {
  SymEig e = sym_eig(s);
  Matrix root(s.rows, s.rows);
  for (int j = 0; j < s.rows; ++j) {
    double v = e.values[j];
    if (v < 0.0) {
      detail::require(v >= -kPsdSlack, ErrorKind::Infeasible,
                      "factor recovery: I - B B^T has a negative eigenvalue");
      v = 0.0;
    }
    const double r = std::sqrt(v);
    for (int i = 0; i < s.rows; ++i) root(i, j) = e.vectors(i, j) * r;
  }
  return matmul(root, transpose(e.vectors));
}

}  // namespace

std::pair<Matrix, Matrix> linear_from_weight(const Matrix& w, uint64_t seed) {
  detail::require(!w.empty(), ErrorKind::Dimension, "linear_from_weight: empty weight");
  detail::require(is_finite(w), ErrorKind::Domain, "linear_from_weight: weight must be finite");
  const int q = w.rows, p = w.cols;

  Svd s = svd(w);
  const double smax = s.sigma.empty() ? 0.0 : s.sigma.front();
  detail::require(smax <= 1.0 + 1e-10, ErrorKind::Domain,
                  "linear_from_weight: spectral norm exceeds 1");

  // full orthogonal factors; directions beyond rank carry sigma = 0
  const Matrix uw = complete_basis(s.u);  // q x q
  const Matrix vw = complete_basis(s.v);  // p x p
  const int k = static_cast<int>(s.sigma.size());

  // diagonal factors: sigma_a^2 + sigma_b^2 = 1 and 2 sigma_a sigma_b = sigma
  Matrix sig_a(q, q), sig_b(q, p);
  for (int i = 0; i < q; ++i) {
    const double si = (i < k) ? std::clamp(s.sigma[i], 0.0, 1.0) : 0.0;
    const double lo = std::sqrt(1.0 - si), hi = std::sqrt(1.0 + si);
    sig_a(i, i) = 0.5 * (hi + lo);
    if (i < p) sig_b(i, i) = 0.5 * (hi - lo);
  }

  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    const Matrix u = random_orthogonal(q, seed + static_cast<uint64_t>(attempt));
    const Matrix a = matmul(u, matmul(sig_a, transpose(uw)));
    if (!transform_safe(a, 1e-8)) continue;
    const Matrix b = matmul(u, matmul(sig_b, transpose(vw)));
    return inverse_cayley(a, b);
  }
  throw Error(ErrorKind::Seeding,
              "linear_from_weight: no rotation admitted the inverse transform after 16 draws");
}

DirectParams params_from_lmi(const std::vector<Matrix>& w, const std::vector<Matrix>& lambda,
                             double gamma, uint64_t seed) {
  // the construction below is only valid on certified weights
  const Matrix h = assemble_H(w, lambda, gamma);
  const double mineig = min_eig_sym(h);
  detail::require(mineig >= -kPsdSlack, ErrorKind::Infeasible,
                  "params_from_lmi: certificate matrix is not positive semidefinite");

  const int last = static_cast<int>(w.size()) - 1;
  DirectParams p;
  p.gamma = gamma;

  std::vector<Matrix> psi(last);  // hidden scale vectors
  for (int k = 0; k < last; ++k) {
    psi[k] = Matrix(lambda[k].rows, 1);
    Matrix d(lambda[k].rows, 1);
    for (int i = 0; i < lambda[k].rows; ++i) {
      psi[k](i, 0) = std::sqrt(lambda[k](i, 0));
      d(i, 0) = std::log(psi[k](i, 0));
    }
    p.hidden_scales.push_back(std::move(d));
  }

  const double boundary = std::sqrt(2.0 / gamma);  // Psi_L diagonal = Psi_{-1}^{-1}
  Matrix a_prev;                                   // empty means "identity"

  for (int k = 0; k <= last; ++k) {
    // T = (1/2) Psi_k W_k Psi_{k-1}^{-1}
    Matrix t = w[k];
    if (k < last) {
      for (int i = 0; i < t.rows; ++i) {
        const double s = 0.5 * psi[k](i, 0);
        for (int j = 0; j < t.cols; ++j) t(i, j) *= s;
      }
    } else {
      t = (0.5 * boundary) * t;
    }
    if (k > 0) {
      for (int j = 0; j < t.cols; ++j) {
        const double s = 1.0 / psi[k - 1](j, 0);
        for (int i = 0; i < t.rows; ++i) t(i, j) *= s;
      }
    } else {
      t = boundary * t;
    }

    // B_k = T (A_{k-1}^T)^{-1}; pseudoinverse when A_{k-1} is singular,
    // identity when it vanished entirely (the certificate then forces the
    // coupling to vanish too, so any unitary budget works).
    Matrix bk;
    if (a_prev.empty()) {
      bk = std::move(t);
    } else if (max_abs(a_prev) < 1e-14) {
      bk = std::move(t);
    } else {
      try {
        bk = transpose(solve(a_prev, transpose(t)));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Singular) throw;
        bk = matmul(t, pinv(transpose(a_prev)));
      }
    }

    Matrix gram = matmul(bk, transpose(bk));
    Matrix s = Matrix::identity(bk.rows) - gram;
    const Matrix root = sqrt_psd(s);

    Matrix ak;
    bool ok = false;
    for (int attempt = 0; attempt < kMaxRedraws && !ok; ++attempt) {
      const uint64_t draw_seed =
          seed + 0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(k + 1) + static_cast<uint64_t>(attempt);
      ak = matmul(root, random_orthogonal(bk.rows, draw_seed));
      ok = transform_safe(ak, 1e-10);
    }
    detail::require(ok, ErrorKind::Seeding,
                    "params_from_lmi: no rotation admitted the inverse transform after 16 draws");

    auto [x, y] = inverse_cayley(ak, bk);
    LayerParams lp;
    lp.g = frobenius_norm(x);
    lp.h = frobenius_norm(y);
    lp.b = Matrix::zeros(bk.rows, 1);
    lp.x = std::move(x);
    lp.y = std::move(y);
    p.layers.push_back(std::move(lp));
    a_prev = std::move(ak);
  }
  return p;
}

}  // namespace lbnet
