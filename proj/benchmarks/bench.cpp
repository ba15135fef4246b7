// Microbenchmarks for the hot paths: the orthogonal-pair transform, the
// dense linear algebra kernels, FFTs, convolution forward passes and one
// full training step (tape build + backward).
#include <benchmark/benchmark.h>

#include "lbnet/cayley.hpp"
#include "lbnet/circconv.hpp"
#include "lbnet/diffmodel.hpp"
#include "lbnet/fft.hpp"
#include "lbnet/linalg.hpp"
#include "lbnet/rng.hpp"
#include "lbnet/sandwich.hpp"

using namespace lbnet;

namespace {

DirectParams wide_params() { return init_params({1, 86, 86, 86, 86, 86, 86, 86, 86, 1}, 10.0, 1); }

void BM_Cayley(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(1);
  const Matrix x = rng.normal_matrix(n, n);
  const Matrix y = rng.normal_matrix(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(cayley(x, y));
}
BENCHMARK(BM_Cayley)->Arg(8)->Arg(32)->Arg(64);

void BM_SpectralNorm(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(2);
  const Matrix m = rng.normal_matrix(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(spectral_norm(m));
}
BENCHMARK(BM_SpectralNorm)->Arg(16)->Arg(64);

void BM_Svd(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(3);
  const Matrix m = rng.normal_matrix(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(svd(m));
}
BENCHMARK(BM_Svd)->Arg(16)->Arg(64);

void BM_SymEig(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(4);
  const Matrix g = rng.normal_matrix(n, n);
  const Matrix s = matmul(transpose(g), g);
  for (auto _ : state) benchmark::DoNotOptimize(sym_eigenvalues(s));
}
BENCHMARK(BM_SymEig)->Arg(32)->Arg(96);

// Power-of-two grids take the radix-2 path; other sizes go through the
// convolution-based fallback.
void BM_Fft2(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  Rng rng(5);
  Tensor4 x(4, 3, s, s);
  for (auto& v : x.data) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(fft2_batch(x));
}
BENCHMARK(BM_Fft2)->Arg(16)->Arg(17);

void BM_ConvForward(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  Rng rng(6);
  ConvParams cp;
  cp.p = Tensor4(8, 4, s, s);
  for (auto& v : cp.p.data) v = 0.7 * rng.normal();
  cp.d = rng.normal_matrix(4, 1, 0.3);
  cp.b = rng.normal_matrix(4, 1, 0.5);
  const SpectrumCache sc = conv_realize(cp);
  Tensor4 h(8, 4, s, s);
  for (auto& v : h.data) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(conv_forward(sc, h, Activation::Relu));
}
BENCHMARK(BM_ConvForward)->Arg(4)->Arg(8);

void BM_Realize(benchmark::State& state) {
  const DirectParams p = wide_params();
  for (auto _ : state) benchmark::DoNotOptimize(realize(p));
}
BENCHMARK(BM_Realize);

void BM_Forward(benchmark::State& state) {
  const RealizedModel m = realize(wide_params());
  Rng rng(7);
  const Matrix x = rng.normal_matrix(1, 50);
  for (auto _ : state) benchmark::DoNotOptimize(forward(m, x, Activation::Relu));
}
BENCHMARK(BM_Forward);

// One optimizer step worth of work: record the differentiable forward pass
// on a batch, evaluate the loss and sweep the adjoints back.
void BM_TapeStep(benchmark::State& state) {
  const DirectParams p = wide_params();
  Rng rng(8);
  const Matrix x = rng.normal_matrix(1, 50);
  const Matrix t = rng.normal_matrix(1, 50);
  for (auto _ : state) {
    ad::Tape tape;
    const TapedParams tp = make_leaves(tape, p);
    const ad::Var loss =
        mse(tape, taped_forward(tape, tp, tape.constant(x), Activation::Relu),
            tape.constant(t));
    tape.backward(loss);
    benchmark::DoNotOptimize(tape.grad(tp.layers[0].y));
  }
}
BENCHMARK(BM_TapeStep);

}  // namespace

BENCHMARK_MAIN();
