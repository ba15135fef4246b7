#include "lbnet/diffmodel.hpp"

#include <cmath>

namespace lbnet {

namespace {

constexpr double kNormFloor = 1e-12;
const double kSqrt2 = std::sqrt(2.0);

Matrix scalar_mat(double v) {
  Matrix m(1, 1);
  m(0, 0) = v;
  return m;
}

// g * m / |m|_F, recorded. Falls back to the raw matrix when the direction
// has collapsed, matching the untaped path.
ad::Var rescale(ad::Tape& t, ad::Var m, ad::Var g) {
  if (frobenius_norm(t.value(m)) < kNormFloor) return m;
  return t.scale_var(m, t.ediv(g, t.fro_norm(m)));
}

struct TapedFactors {
  ad::Var a_t;  // A^T
  ad::Var b;
};

TapedFactors taped_cayley(ad::Tape& t, ad::Var x, ad::Var y) {
  const int q = t.value(x).rows;
  ad::Var z = t.add(t.sub(x, t.transpose(x)), t.matmul(t.transpose(y), y));
  ad::Var eye = t.constant(Matrix::identity(q));
  ad::Var ipz = t.add(eye, z);
  TapedFactors f;
  f.a_t = t.solve(ipz, t.sub(eye, z));
  f.b = t.solve(t.transpose(ipz), t.scale_const(t.transpose(y), -2.0));
  return f;
}

}  // namespace

TapedParams make_leaves(ad::Tape& t, const DirectParams& p) {
  // realize() validates shapes; run it for the checks and drop the result.
  (void)realize(p);
  TapedParams tp;
  tp.gamma = p.gamma;
  const int last = static_cast<int>(p.layers.size()) - 1;
  for (int k = 0; k <= last; ++k) {
    const auto& l = p.layers[k];
    TapedLayer tl;
    tl.x = t.leaf(l.x);
    tl.y = t.leaf(l.y);
    tl.b = t.leaf(l.b);
    tl.g = t.leaf(scalar_mat(l.g));
    tl.h = t.leaf(scalar_mat(l.h));
    if (k < last) tl.d = t.leaf(p.hidden_scales[k]);
    tp.layers.push_back(tl);
  }
  return tp;
}

ad::Var taped_forward(ad::Tape& t, const TapedParams& tp, ad::Var input, Activation act) {
  detail::require(!tp.layers.empty(), ErrorKind::Dimension, "taped_forward: no layers");
  const double root_gamma = std::sqrt(tp.gamma);
  const int last = static_cast<int>(tp.layers.size()) - 1;

  ad::Var h = t.scale_const(input, root_gamma);
  for (int k = 0; k < last; ++k) {
    const TapedLayer& l = tp.layers[k];
    TapedFactors f = taped_cayley(t, rescale(t, l.x, l.g), rescale(t, l.y, l.h));
    ad::Var psi = t.exp(l.d);
    ad::Var psi_inv = t.exp(t.scale_const(l.d, -1.0));
    ad::Var u = t.matmul(f.b, h);
    u = t.bc_mul(t.scale_const(psi_inv, kSqrt2), u);
    u = t.act(t.bc_add(u, l.b), act);
    u = t.bc_mul(psi, u);
    h = t.scale_const(t.matmul(f.a_t, u), kSqrt2);
  }
  const TapedLayer& l = tp.layers[last];
  TapedFactors f = taped_cayley(t, rescale(t, l.x, l.g), rescale(t, l.y, l.h));
  return t.bc_add(t.scale_const(t.matmul(f.b, h), root_gamma), l.b);
}

ad::Var taped_sandwich_const(ad::Tape& t, const RealizedLayer& layer, ad::Var h, Activation act) {
  detail::require(!layer.psi.empty(), ErrorKind::Dimension,
                  "taped_sandwich_const: layer has no scale");
  Matrix pre(layer.psi.rows, 1);
  for (int i = 0; i < pre.rows; ++i) pre(i, 0) = kSqrt2 / layer.psi(i, 0);
  ad::Var u = t.matmul(t.constant(layer.factors.b), h);
  u = t.bc_mul(t.constant(pre), u);
  u = t.act(t.bc_add(u, t.constant(layer.bias)), act);
  u = t.bc_mul(t.constant(layer.psi), u);
  return t.scale_const(t.matmul(t.constant(transpose(layer.factors.a)), u), kSqrt2);
}

ad::Var taped_output_const(ad::Tape& t, const RealizedLayer& out, double gamma, ad::Var h) {
  return t.bc_add(t.scale_const(t.matmul(t.constant(out.factors.b), h), std::sqrt(gamma)),
                  t.constant(out.bias));
}

ad::Var taped_forward_const(ad::Tape& t, const RealizedModel& m, ad::Var input, Activation act) {
  detail::require(t.value(input).rows == m.input_dim(), ErrorKind::Dimension,
                  "taped_forward_const: input width mismatch");
  const int last = m.depth();
  ad::Var h = t.scale_const(input, std::sqrt(m.gamma));
  for (int k = 0; k < last; ++k) h = taped_sandwich_const(t, m.layers[k], h, act);
  return taped_output_const(t, m.layers[last], m.gamma, h);
}

ad::Var mse(ad::Tape& t, ad::Var pred, ad::Var target) {
  const Matrix& p = t.value(pred);
  const double count = static_cast<double>(p.rows) * p.cols;
  detail::require(count > 0, ErrorKind::Dimension, "mse: empty prediction");
  return t.scale_const(t.sum_sq(t.sub(pred, target)), 1.0 / count);
}

}  // namespace lbnet
