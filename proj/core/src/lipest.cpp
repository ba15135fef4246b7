#include "lbnet/lipest.hpp"

#include <algorithm>
#include <cmath>

#include "lbnet/diffmodel.hpp"
#include "lbnet/rng.hpp"

namespace lbnet {

namespace {

constexpr double kDxFloor = 1e-6;
constexpr double kDxInit = 0.1;
constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ull;
constexpr double kPi = 3.141592653589793238462643383279502884;

struct Ratio {
  double value = 0.0;
  Matrix gx;
  Matrix gdx;
};

Ratio eval_ratio(const DiffMap& f, const Matrix& x, const Matrix& dx, bool want_grad) {
  ad::Tape t;
  ad::Var vx = t.leaf(x);
  ad::Var vdx = t.leaf(dx);
  ad::Var hi = f(t, t.add(vx, vdx));
  ad::Var lo = f(t, vx);
  ad::Var ratio = t.ediv(t.fro_norm(t.sub(hi, lo)), t.fro_norm(vdx));
  Ratio r;
  r.value = t.value(ratio)(0, 0);
  if (want_grad) {
    t.backward(ratio);
    r.gx = t.grad(vx);
    r.gdx = t.grad(vdx);
  }
  return r;
}

void renorm_dx(Matrix& dx, double target) {
  const double n = frobenius_norm(dx);
  if (n < 1e-300) {
    for (auto& v : dx.data) v = 0.0;
    dx(0, 0) = target;
    return;
  }
  const double s = target / n;
  for (auto& v : dx.data) v *= s;
}

}  // namespace

LipEstimate empirical_lipschitz(const DiffMap& f, int input_dim, const LipSettings& s) {
  detail::require(input_dim >= 1, ErrorKind::Dimension,
                  "empirical_lipschitz: input dimension must be positive");
  detail::require(s.restarts >= 1 && s.iters >= 1, ErrorKind::Domain,
                  "empirical_lipschitz: restarts and iters must be at least 1");
  detail::require(s.step > 0.0, ErrorKind::Domain, "empirical_lipschitz: step must be positive");

  LipEstimate est;
  for (int r = 0; r < s.restarts; ++r) {
    Rng rng(s.seed + kGolden * static_cast<uint64_t>(r + 1));
    Matrix x = rng.normal_matrix(input_dim, 1, 1.0);
    Matrix dx = rng.normal_matrix(input_dim, 1, 1.0);
    renorm_dx(dx, kDxInit);

    bool abandoned = false;
    try {
      for (int it = 0; it < s.iters; ++it) {
        Ratio rr = eval_ratio(f, x, dx, true);
        if (!std::isfinite(rr.value)) {
          abandoned = true;
          break;
        }
        double gsq = 0.0;
        for (double v : rr.gx.data) gsq += v * v;
        for (double v : rr.gdx.data) gsq += v * v;
        const double gn = std::sqrt(gsq);
        if (gn < 1e-18) break;  // flat: the quotient is locally constant

        const double eta = s.step * 0.5 * (1.0 + std::cos(kPi * it / s.iters));
        const double scale = eta / gn;
        for (size_t i = 0; i < x.data.size(); ++i) x.data[i] += scale * rr.gx.data[i];
        for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += scale * rr.gdx.data[i];
        if (frobenius_norm(dx) < kDxFloor) renorm_dx(dx, kDxFloor);
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Diverged) throw;
      abandoned = true;
    }
    if (abandoned) {
      ++est.nan_restarts;
      continue;
    }

    const double final_ratio = eval_ratio(f, x, dx, false).value;
    if (!std::isfinite(final_ratio)) {
      ++est.nan_restarts;
      continue;
    }
    est.lower = std::max(est.lower, final_ratio);
  }
  return est;
}

LipEstimate empirical_lipschitz(const RealizedModel& m, Activation act, const LipSettings& s) {
  DiffMap f = [&m, act](ad::Tape& t, ad::Var in) { return taped_forward_const(t, m, in, act); };
  return empirical_lipschitz(f, m.input_dim(), s);
}

double tightness(const RealizedModel& m, Activation act, const LipSettings& s) {
  const double lower = empirical_lipschitz(m, act, s).lower;
  return std::clamp(lower / m.gamma, 0.0, 1.0);
}

std::vector<LayerBound> per_layer_bounds(const RealizedModel& m, Activation act,
                                         const LipSettings& s) {
  std::vector<LayerBound> out;
  const int depth = m.depth();
  for (int k = 0; k < depth; ++k) {
    const RealizedLayer& layer = m.layers[k];
    DiffMap f = [&layer, act](ad::Tape& t, ad::Var h) {
      return taped_sandwich_const(t, layer, h, act);
    };
    LayerBound row;
    row.layer = k;
    row.certified = 1.0;
    row.observed = empirical_lipschitz(f, layer.factors.b.cols, s).lower;
    out.push_back(row);
  }
  const RealizedLayer& last = m.layers[depth];
  const double gamma = m.gamma;
  DiffMap f = [&last, gamma](ad::Tape& t, ad::Var h) {
    return taped_output_const(t, last, gamma, h);
  };
  LayerBound row;
  row.layer = depth;
  row.certified = std::sqrt(gamma);
  row.observed = empirical_lipschitz(f, last.factors.b.cols, s).lower;
  out.push_back(row);
  return out;
}

}  // namespace lbnet
