#include <doctest.h>

#include <cmath>

#include "lbnet/circconv.hpp"
#include "lbnet/linalg.hpp"
#include "lbnet/rng.hpp"
#include "lbnet/sandwich.hpp"
#include "support.hpp"

using namespace lbnet;

namespace {

ConvParams random_conv(int cin, int cout, int s, uint64_t seed, double scale = 0.7) {
  Rng rng(seed);
  ConvParams cp;
  cp.p = Tensor4(cin + cout, cout, s, s);
  for (auto& v : cp.p.data) v = scale * rng.normal();
  cp.d = rng.normal_matrix(cout, 1, 0.3);
  cp.b = rng.normal_matrix(cout, 1, 0.5);
  return cp;
}

ConvParams zero_conv(int cin, int cout, int s) {
  ConvParams cp;
  cp.p = Tensor4(cin + cout, cout, s, s);
  cp.d = Matrix::zeros(cout, 1);
  cp.b = Matrix::zeros(cout, 1);
  return cp;
}

Tensor4 random_input(int batch, int cin, int s, uint64_t seed) {
  Rng rng(seed);
  Tensor4 h(batch, cin, s, s);
  for (auto& v : h.data) v = rng.normal();
  return h;
}

// flattens one batch slice in the (channel, row, col) order the dense
// operators use
Matrix vec_slices(const Tensor4& h) {
  const int n = h.shape[1] * h.shape[2] * h.shape[3];
  Matrix v(n, h.shape[0]);
  for (int b = 0; b < h.shape[0]; ++b) {
    int r = 0;
    for (int c = 0; c < h.shape[1]; ++c)
      for (int u = 0; u < h.shape[2]; ++u)
        for (int w = 0; w < h.shape[3]; ++w) v(r++, b) = h(b, c, u, w);
  }
  return v;
}

double unitarity_residual(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix g = matmul(a, conj_transpose(a)) + matmul(b, conj_transpose(b));
  for (int i = 0; i < g.rows; ++i) g(i, i) -= 1.0;
  return max_abs(g);
}

double tensor_dist(const Tensor4& a, const Tensor4& b) {
  REQUIRE(a.shape == b.shape);
  double m = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace

TEST_SUITE("circconv") {

TEST_CASE("conv_realize: single-pixel grid reduces to the real transform") {
  const ConvParams cp = random_conv(3, 2, 1, 17);
  const SpectrumCache sc = conv_realize(cp, BinMode::Full);
  Matrix x(2, 2), y(3, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) x(i, j) = cp.p(i, j, 0, 0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) y(i, j) = cp.p(2 + i, j, 0, 0);
  const CayleyFactors f = cayley(x, y);
  REQUIRE(sc.a.size() == 1);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(sc.a[0](i, j).real() - f.a(i, j)) < 1e-13);
      CHECK(std::abs(sc.a[0](i, j).imag()) < 1e-13);
    }
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(sc.b[0](i, j).real() - f.b(i, j)) < 1e-13);
      CHECK(std::abs(sc.b[0](i, j).imag()) < 1e-13);
    }
}

TEST_CASE("conv_realize: zero parameters give identity spectra everywhere") {
  const SpectrumCache sc = conv_realize(zero_conv(2, 3, 4), BinMode::Full);
  REQUIRE(sc.a.size() == 16);
  for (size_t k = 0; k < sc.a.size(); ++k) {
    ComplexMatrix d = sc.a[k];
    for (int i = 0; i < 3; ++i) d(i, i) -= 1.0;
    CHECK(max_abs(d) < 1e-12);
    CHECK(max_abs(sc.b[k]) < 1e-12);
  }
}

TEST_CASE("conv_realize: every bin is unitary, in both bin modes") {
  const ConvParams cp = random_conv(3, 4, 4, 23);
  for (BinMode mode : {BinMode::Full, BinMode::Reduced}) {
    const SpectrumCache sc = conv_realize(cp, mode);
    for (size_t k = 0; k < sc.a.size(); ++k) CHECK(unitarity_residual(sc.a[k], sc.b[k]) < 1e-9);
  }
}

TEST_CASE("conv_realize: reduced bins reproduce the full computation") {
  for (int s : {2, 3, 4, 5}) {
    const ConvParams cp = random_conv(2, 3, s, 29 + static_cast<uint64_t>(s));
    const Tensor4 h = random_input(2, 2, s, 31);
    const Tensor4 full = conv_forward(conv_realize(cp, BinMode::Full), h, Activation::Relu);
    const Tensor4 red = conv_forward(conv_realize(cp, BinMode::Reduced), h, Activation::Relu);
    CHECK(tensor_dist(full, red) < 1e-10);
  }
}

TEST_CASE("conv_realize: malformed parameters are rejected") {
  ConvParams cp = zero_conv(2, 2, 2);
  cp.d = Matrix::zeros(3, 1);
  try {
    (void)conv_realize(cp);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Dimension);
  }
  ConvParams nf = zero_conv(2, 2, 2);
  nf.p.data[0] = std::nan("");
  try {
    (void)conv_realize(nf);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Domain);
  }
}

TEST_CASE("conv_forward: identity activation equals the doubly-circulant product") {
  for (int s : {1, 2, 3, 4}) {
    ConvParams cp = random_conv(2, 3, s, 37 + static_cast<uint64_t>(s));
    cp.b = Matrix::zeros(3, 1);  // bias off so the layer is exactly linear
    const SpectrumCache sc = conv_realize(cp);
    const DenseConvOperators ops = conv_dense_oracle(sc);
    const Matrix lin = 2.0 * matmul(transpose(ops.c_a), ops.c_b);

    const Tensor4 h = random_input(3, 2, s, 41);
    double imag = 0.0;
    const Tensor4 out = conv_forward(sc, h, Activation::Identity, &imag);
    CHECK(imag < 1e-9);
    const Matrix want = matmul(lin, vec_slices(h));
    const Matrix got = vec_slices(out);
    CHECK(testsup::diff(got, want) < 1e-8);

    CHECK(spectral_norm(lin) <= 1.0 + 1e-8);
  }
}

TEST_CASE("conv_forward: general activation matches the dense sandwich layer") {
  for (int s : {2, 4}) {
    const ConvParams cp = random_conv(3, 2, s, 43 + static_cast<uint64_t>(s));
    const SpectrumCache sc = conv_realize(cp);
    const DenseConvOperators ops = conv_dense_oracle(sc);
    const Tensor4 h = random_input(2, 3, s, 47);
    for (Activation act : {Activation::Relu, Activation::Tanh}) {
      const Tensor4 out = conv_forward(sc, h, act);
      const Matrix want = conv_dense_forward(ops, sc, vec_slices(h), act);
      CHECK(testsup::diff(vec_slices(out), want) < 1e-8);
    }
  }
}

TEST_CASE("conv_forward: single-pixel grid reduces to the dense sandwich layer") {
  const ConvParams cp = random_conv(3, 2, 1, 53);
  const SpectrumCache sc = conv_realize(cp);
  RealizedLayer layer;
  layer.psi = sc.psi;
  layer.bias = sc.bias;
  layer.factors.a = Matrix(2, 2);
  layer.factors.b = Matrix(2, 3);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) layer.factors.a(i, j) = sc.a[0](i, j).real();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) layer.factors.b(i, j) = sc.b[0](i, j).real();

  const Tensor4 h = random_input(4, 3, 1, 59);
  const Tensor4 out = conv_forward(sc, h, Activation::Relu);
  Matrix h_cols(3, 4);
  for (int b = 0; b < 4; ++b)
    for (int c = 0; c < 3; ++c) h_cols(c, b) = h(b, c, 0, 0);
  const Matrix want = sandwich_apply(layer, h_cols, Activation::Relu);
  for (int b = 0; b < 4; ++b)
    for (int c = 0; c < 2; ++c) CHECK(std::abs(out(b, c, 0, 0) - want(c, b)) < 1e-12);
}

TEST_CASE("conv_forward: the layer is a contraction on random input pairs") {
  const ConvParams cp = random_conv(2, 2, 4, 61, 1.3);
  const SpectrumCache sc = conv_realize(cp);
  for (uint64_t seed : {63u, 64u, 65u, 66u, 67u}) {
    const Tensor4 h1 = random_input(1, 2, 4, seed);
    const Tensor4 h2 = random_input(1, 2, 4, seed + 100);
    const Tensor4 o1 = conv_forward(sc, h1, Activation::Relu);
    const Tensor4 o2 = conv_forward(sc, h2, Activation::Relu);
    double din = 0.0, dout = 0.0;
    for (size_t i = 0; i < h1.data.size(); ++i) {
      const double d = h1.data[i] - h2.data[i];
      din += d * d;
    }
    for (size_t i = 0; i < o1.data.size(); ++i) {
      const double d = o1.data[i] - o2.data[i];
      dout += d * d;
    }
    CHECK(std::sqrt(dout) <= std::sqrt(din) + 1e-8);
  }
}

TEST_CASE("conv_dense_oracle: zero parameters materialize the identity") {
  const SpectrumCache sc = conv_realize(zero_conv(2, 3, 3), BinMode::Full);
  const DenseConvOperators ops = conv_dense_oracle(sc);
  CHECK(testsup::diff(ops.c_a, Matrix::identity(3 * 9)) < 1e-12);
  CHECK(max_abs(ops.c_b) < 1e-12);
}

TEST_CASE("conv_dense_oracle: operators inherit the orthogonal-pair identity") {
  const ConvParams cp = random_conv(2, 3, 2, 71);
  const SpectrumCache sc = conv_realize(cp);
  const DenseConvOperators ops = conv_dense_oracle(sc);
  const Matrix g = matmul(ops.c_a, transpose(ops.c_a)) + matmul(ops.c_b, transpose(ops.c_b));
  CHECK(testsup::diff(g, Matrix::identity(3 * 4)) < 1e-8);
}

TEST_CASE("conv_dense_oracle: refuses grids that would not fit") {
  ConvParams cp = zero_conv(1, 1, 9);
  const SpectrumCache sc = conv_realize(cp);
  try {
    (void)conv_dense_oracle(sc);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Domain);
  }
}

}  // TEST_SUITE
