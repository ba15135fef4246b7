#include "lbnet/sandwich.hpp"

#include <cmath>

#include "lbnet/rng.hpp"

namespace lbnet {

namespace {

constexpr double kNormFloor = 1e-12;
const double kSqrt2 = std::sqrt(2.0);

Matrix rescaled(const Matrix& m, double target) {
  const double n = frobenius_norm(m);
  if (n < kNormFloor) return m;  // degenerate direction: use the raw matrix
  return (target / n) * m;
}

// rows of m scaled by the entries of v (v is n x 1, m is n x cols)
Matrix row_scale(const Matrix& v, const Matrix& m) {
  detail::require(v.rows == m.rows && v.cols == 1, ErrorKind::Dimension,
                  "row_scale: scale vector does not match");
  Matrix out = m;
  for (int i = 0; i < m.rows; ++i) {
    const double s = v(i, 0);
    for (int j = 0; j < m.cols; ++j) out(i, j) *= s;
  }
  return out;
}

Matrix add_bias(const Matrix& m, const Matrix& b) {
  detail::require(b.rows == m.rows && b.cols == 1, ErrorKind::Dimension,
                  "bias does not match layer output");
  Matrix out = m;
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) out(i, j) += b(i, 0);
  return out;
}

void validate(const DirectParams& p) {
  detail::require(p.gamma > 0.0 && std::isfinite(p.gamma), ErrorKind::Domain,
                  "realize: gamma must be positive and finite");
  detail::require(!p.layers.empty(), ErrorKind::Dimension, "realize: no layers");
  detail::require(p.hidden_scales.size() + 1 == p.layers.size(), ErrorKind::Dimension,
                  "realize: need exactly one scale vector per hidden layer");
  for (size_t k = 0; k < p.layers.size(); ++k) {
    const auto& l = p.layers[k];
    detail::require(l.x.rows == l.x.cols, ErrorKind::Dimension, "realize: X must be square");
    detail::require(l.y.cols == l.x.rows, ErrorKind::Dimension,
                    "realize: Y columns must match X");
    detail::require(l.b.rows == l.x.rows && l.b.cols == 1, ErrorKind::Dimension,
                    "realize: bias shape mismatch");
    detail::require(is_finite(l.x) && is_finite(l.y) && is_finite(l.b) &&
                        std::isfinite(l.g) && std::isfinite(l.h),
                    ErrorKind::Domain, "realize: parameters must be finite");
    if (k > 0)
      detail::require(l.y.rows == p.layers[k - 1].x.rows, ErrorKind::Dimension,
                      "realize: layer widths do not chain");
    if (k < p.hidden_scales.size()) {
      const auto& d = p.hidden_scales[k];
      detail::require(d.rows == l.x.rows && d.cols == 1, ErrorKind::Dimension,
                      "realize: scale vector shape mismatch");
      detail::require(is_finite(d), ErrorKind::Domain, "realize: scales must be finite");
    }
  }
}

}  // namespace

RealizedModel realize(const DirectParams& p) {
  validate(p);
  RealizedModel m;
  m.gamma = p.gamma;
  const int last = static_cast<int>(p.layers.size()) - 1;
  for (int k = 0; k <= last; ++k) {
    const auto& l = p.layers[k];
    RealizedLayer r;
    r.factors = cayley(rescaled(l.x, l.g), rescaled(l.y, l.h));
    r.bias = l.b;
    if (k < last) {
      const Matrix& d = p.hidden_scales[k];
      r.psi = Matrix(d.rows, 1);
      for (int i = 0; i < d.rows; ++i) r.psi(i, 0) = std::exp(d(i, 0));
    }
    m.layers.push_back(std::move(r));
  }
  return m;
}

Matrix sandwich_apply(const RealizedLayer& layer, const Matrix& h_in, Activation act) {
  detail::require(!layer.psi.empty(), ErrorKind::Dimension,
                  "sandwich_apply: layer has no scale (output layers are applied by forward)");
  Matrix u = matmul(layer.factors.b, h_in);
  for (int i = 0; i < u.rows; ++i) {
    const double s = kSqrt2 / layer.psi(i, 0);
    for (int j = 0; j < u.cols; ++j) u(i, j) *= s;
  }
  u = add_bias(u, layer.bias);
  for (auto& v : u.data) v = activate(act, v);
  u = row_scale(layer.psi, u);
  return kSqrt2 * matmul(transpose(layer.factors.a), u);
}

Matrix forward(const RealizedModel& m, const Matrix& x, Activation act) {
  detail::require(x.rows == m.input_dim(), ErrorKind::Dimension,
                  "forward: input width mismatch");
  const double root_gamma = std::sqrt(m.gamma);
  Matrix h = root_gamma * x;
  const int last = static_cast<int>(m.layers.size()) - 1;
  for (int k = 0; k < last; ++k) h = sandwich_apply(m.layers[k], h, act);
  return add_bias(root_gamma * matmul(m.layers[last].factors.b, h), m.layers[last].bias);
}

ExtractedWeights extract_weights(const RealizedModel& m) {
  ExtractedWeights out;
  out.gamma = m.gamma;
  const int last = static_cast<int>(m.layers.size()) - 1;
  const double boundary = std::sqrt(m.gamma / 2.0);  // Psi_{-1} = Psi_L^{-1} scale

  for (int k = 0; k <= last; ++k) {
    const auto& layer = m.layers[k];
    Matrix w = layer.factors.b;
    if (k > 0) w = matmul(w, transpose(m.layers[k - 1].factors.a));

    // left factor: 2 Psi_k^{-1}, with Psi_L fixed at sqrt(2/gamma) I
    if (k < last) {
      for (int i = 0; i < w.rows; ++i) {
        const double s = 2.0 / layer.psi(i, 0);
        for (int j = 0; j < w.cols; ++j) w(i, j) *= s;
      }
    } else {
      w = (2.0 * boundary) * w;
    }
    // right factor: Psi_{k-1}, with Psi_{-1} fixed at sqrt(gamma/2) I
    if (k > 0) {
      const Matrix& prev = m.layers[k - 1].psi;
      for (int j = 0; j < w.cols; ++j) {
        const double s = prev(j, 0);
        for (int i = 0; i < w.rows; ++i) w(i, j) *= s;
      }
    } else {
      w = boundary * w;
    }

    out.w.push_back(std::move(w));
    out.b.push_back(layer.bias);
    if (k < last) {
      Matrix lam(layer.psi.rows, 1);
      for (int i = 0; i < lam.rows; ++i) lam(i, 0) = layer.psi(i, 0) * layer.psi(i, 0);
      out.lambda.push_back(std::move(lam));
    }
  }
  return out;
}

Matrix explicit_forward(const ExtractedWeights& w, const Matrix& x, Activation act) {
  detail::require(!w.w.empty(), ErrorKind::Dimension, "explicit_forward: no weights");
  Matrix z = x;
  const int last = static_cast<int>(w.w.size()) - 1;
  for (int k = 0; k < last; ++k) {
    z = add_bias(matmul(w.w[k], z), w.b[k]);
    for (auto& v : z.data) v = activate(act, v);
  }
  return add_bias(matmul(w.w[last], z), w.b[last]);
}

DirectParams init_params(const std::vector<int>& widths, double gamma, uint64_t seed) {
  detail::require(widths.size() >= 2, ErrorKind::Dimension,
                  "init_params: need at least input and output widths");
  for (int n : widths)
    detail::require(n >= 1, ErrorKind::Dimension, "init_params: widths must be positive");
  detail::require(gamma > 0.0, ErrorKind::Domain, "init_params: gamma must be positive");

  Rng rng(seed);
  DirectParams p;
  p.gamma = gamma;
  const int layer_count = static_cast<int>(widths.size()) - 1;
  for (int k = 0; k < layer_count; ++k) {
    const int n_in = widths[k], n_out = widths[k + 1];
    LayerParams l;
    l.x = rng.normal_matrix(n_out, n_out, 1.0 / std::sqrt(static_cast<double>(n_out)));
    l.y = rng.normal_matrix(n_in, n_out, 1.0 / std::sqrt(static_cast<double>(n_in)));
    l.b = Matrix::zeros(n_out, 1);
    l.g = frobenius_norm(l.x);
    l.h = frobenius_norm(l.y);
    p.layers.push_back(std::move(l));
    if (k < layer_count - 1) p.hidden_scales.push_back(Matrix::zeros(n_out, 1));
  }
  return p;
}

}  // namespace lbnet
