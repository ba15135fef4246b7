#include <doctest.h>

#include <cmath>
#include <limits>

#include "lbnet/certify.hpp"
#include "lbnet/linalg.hpp"
#include "lbnet/lipest.hpp"
#include "lbnet/train.hpp"
#include "support.hpp"

using namespace lbnet;
using testsup::mat;
using testsup::scrambled_params;

namespace {

LipSettings quick(int restarts = 4, int iters = 50, uint64_t seed = 7) {
  LipSettings s;
  s.restarts = restarts;
  s.iters = iters;
  s.seed = seed;
  return s;
}

LayerParams exact_layer(double x_val, double y_val) {
  LayerParams l;
  l.x = mat({{x_val}});
  l.y = mat({{y_val}});
  l.b = Matrix::zeros(1, 1);
  l.g = std::abs(x_val);
  l.h = std::abs(y_val);
  return l;
}

// Scalar chain whose hidden factors are both 1/sqrt(2) and whose output
// factor is -1, so the network computes exactly x -> -gamma x.
DirectParams negation_model(double gamma) {
  DirectParams p;
  p.gamma = gamma;
  p.layers = {exact_layer(0.0, 1.0 - std::sqrt(2.0)), exact_layer(0.0, 1.0)};
  p.hidden_scales = {Matrix::zeros(1, 1)};
  return p;
}

}  // namespace

TEST_SUITE("lipest") {

TEST_CASE("a pure scaling map reports its slope exactly") {
  const DiffMap f = [](ad::Tape& t, ad::Var v) { return t.scale_const(v, 2.0); };
  const LipEstimate est = empirical_lipschitz(f, 3, quick());
  CHECK(std::abs(est.lower - 2.0) < 1e-6);
  CHECK(est.nan_restarts == 0);
}

TEST_CASE("a constant map reports zero") {
  Matrix c(3, 1);
  c(0, 0) = 4.0;
  c(1, 0) = -1.0;
  c(2, 0) = 0.5;
  const DiffMap f = [c](ad::Tape& t, ad::Var v) {
    return t.bc_add(t.scale_const(v, 0.0), t.constant(c));
  };
  const LipEstimate est = empirical_lipschitz(f, 3, quick());
  CHECK(est.lower == 0.0);
  CHECK(est.nan_restarts == 0);
}

TEST_CASE("chains that go non-finite are abandoned and counted") {
  const double bad = std::numeric_limits<double>::quiet_NaN();
  const DiffMap f = [bad](ad::Tape& t, ad::Var v) { return t.scale_const(v, bad); };
  const LipEstimate est = empirical_lipschitz(f, 2, quick(5, 10));
  CHECK(est.nan_restarts == 5);
  CHECK(est.lower == 0.0);
}

TEST_CASE("settings are validated") {
  const DiffMap f = [](ad::Tape& t, ad::Var v) { return v; };
  LipSettings s = quick();
  s.restarts = 0;
  try {
    (void)empirical_lipschitz(f, 2, s);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Domain);
  }
  try {
    (void)empirical_lipschitz(f, 0, quick());
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Dimension);
  }
  LipSettings z = quick();
  z.step = 0.0;
  try {
    (void)empirical_lipschitz(f, 2, z);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Domain);
  }
}

TEST_CASE("zero-weight model has tightness zero") {
  DirectParams p;
  p.gamma = 3.0;
  LayerParams l0;
  l0.x = Matrix::zeros(4, 4);
  l0.y = Matrix::zeros(2, 4);
  l0.b = Matrix::zeros(4, 1);
  LayerParams l1;
  l1.x = Matrix::zeros(1, 1);
  l1.y = Matrix::zeros(4, 1);
  l1.b = Matrix::zeros(1, 1);
  p.layers = {l0, l1};
  p.hidden_scales = {Matrix::zeros(4, 1)};
  const RealizedModel m = realize(p);
  CHECK(tightness(m, Activation::Relu, quick()) == 0.0);
}

TEST_CASE("an exactly-linear negation network is found to be fully tight") {
  const RealizedModel m = realize(negation_model(3.0));
  // sanity: the network is x -> -3x
  Matrix x(1, 3);
  x(0, 0) = -1.0;
  x(0, 1) = 0.25;
  x(0, 2) = 2.0;
  const Matrix y = forward(m, x, Activation::Identity);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(y(0, j) + 3.0 * x(0, j)) < 1e-12);

  const LipEstimate est = empirical_lipschitz(m, Activation::Identity, quick(2, 5));
  CHECK(std::abs(est.lower - 3.0) < 1e-9);
  CHECK(tightness(m, Activation::Identity, quick(2, 5)) >= 1.0 - 1e-9);
  CHECK(tightness(m, Activation::Identity, quick(2, 5)) <= 1.0);
}

TEST_CASE("a single linear layer with orthogonal factor matches its spectral norm") {
  DirectParams p;
  p.gamma = 2.0;
  LayerParams out;
  out.x = Matrix::zeros(2, 2);
  out.y = Matrix::identity(2);
  out.b = Matrix::zeros(2, 1);
  out.g = 0.0;
  out.h = frobenius_norm(out.y);
  p.layers = {out};
  const RealizedModel m = realize(p);
  const ExtractedWeights ew = extract_weights(m);
  const double oracle = spectral_norm(ew.w[0]);
  CHECK(std::abs(oracle - 2.0) < 1e-12);
  const LipEstimate est = empirical_lipschitz(m, Activation::Identity, quick(2, 5));
  CHECK(std::abs(est.lower - oracle) < 1e-9);
}

TEST_CASE("estimates never exceed the certified bound") {
  for (double gamma : {0.5, 10.0}) {
    const DirectParams p = scrambled_params({2, 7, 6, 2}, gamma, 81);
    const RealizedModel m = realize(p);
    REQUIRE(check_certificate(m).psd);
    const LipEstimate est = empirical_lipschitz(m, Activation::Relu, quick(6, 120));
    CHECK(est.lower <= gamma * (1.0 + 1e-6));
  }
}

TEST_CASE("the estimate is monotone in the number of restarts") {
  const DirectParams p = scrambled_params({2, 6, 5, 1}, 4.0, 83);
  const RealizedModel m = realize(p);
  double prev = -1.0;
  for (int r = 1; r <= 6; ++r) {
    LipSettings s = quick(r, 40);
    const LipEstimate est = empirical_lipschitz(m, Activation::Relu, s);
    CHECK(est.lower >= prev);
    prev = est.lower;
  }
}

TEST_CASE("per-layer bounds: certified constants and zero-weight observations") {
  DirectParams p;
  p.gamma = 9.0;
  LayerParams l0;
  l0.x = Matrix::zeros(3, 3);
  l0.y = Matrix::zeros(2, 3);
  l0.b = Matrix::zeros(3, 1);
  LayerParams l1;
  l1.x = Matrix::zeros(2, 2);
  l1.y = Matrix::zeros(3, 2);
  l1.b = Matrix::zeros(2, 1);
  p.layers = {l0, l1};
  p.hidden_scales = {Matrix::zeros(3, 1)};
  const auto rows = per_layer_bounds(realize(p), Activation::Relu, quick(2, 10));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].layer == 0);
  CHECK(rows[0].certified == 1.0);
  CHECK(rows[0].observed == 0.0);  // B = 0 makes the stage constant
  CHECK(rows[1].layer == 1);
  CHECK(rows[1].certified == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(rows[1].observed == 0.0);
}

TEST_CASE("trained model: every stage runs close to its certified constant") {
  TrainConfig cfg;
  cfg.gamma = 1.0;
  cfg.width = 16;
  cfg.depth = 3;
  cfg.epochs = 80;
  cfg.seed = 1;
  cfg.n_train = 300;
  cfg.n_test = 200;
  cfg.track_tightness = false;
  const TrainResult r = fit(cfg);
  const RealizedModel m = realize(r.params);

  const auto rows = per_layer_bounds(m, cfg.activation, quick(8, 200, 99));
  REQUIRE(rows.size() == 4);
  for (const auto& row : rows) {
    CHECK(row.observed / row.certified >= 0.95);
    CHECK(row.observed <= row.certified * (1.0 + 1e-6));  // stages are certified too
  }

  LipSettings full = quick(16, 300, 99);
  const double t = tightness(m, cfg.activation, full);
  CHECK(t >= 0.95);
  CHECK(t <= 1.0);
}

}  // TEST_SUITE
