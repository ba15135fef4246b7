#pragma once

#include <cstdint>
#include <vector>

#include "lbnet/activation.hpp"
#include "lbnet/cayley.hpp"

namespace lbnet {

// Free (unconstrained) parameters of one layer. x and y feed the
// orthogonal-pair transform after being rescaled to norms g and h, so the
// optimizer controls direction and magnitude separately.
struct LayerParams {
  Matrix x;  // n_out x n_out
  Matrix y;  // n_in x n_out
  Matrix b;  // n_out x 1
  double g = 0.0;
  double h = 0.0;
};

// The full parameter set of a gamma-Lipschitz network with L hidden layers:
// layers[0..L] (the last entry is the output layer) and one log-scale
// vector per hidden layer. Any real values whatsoever realize into a
// network whose Lipschitz bound gamma holds by construction.
struct DirectParams {
  double gamma = 1.0;
  std::vector<LayerParams> layers;
  std::vector<Matrix> hidden_scales;  // d_j, (n_{j+1}) x 1, j = 0..L-1

  int depth() const { return static_cast<int>(hidden_scales.size()); }
};

// A layer after the transform: psi = exp(d) (empty on the output layer,
// whose scale is fixed by gamma), the orthogonal pair, and the bias.
struct RealizedLayer {
  Matrix psi;  // n_out x 1, strictly positive; empty for the output layer
  CayleyFactors factors;
  Matrix bias;  // n_out x 1
};

struct RealizedModel {
  double gamma = 1.0;
  std::vector<RealizedLayer> layers;

  int depth() const { return static_cast<int>(layers.size()) - 1; }
  int input_dim() const { return layers.front().factors.b.cols; }
  int output_dim() const { return layers.back().factors.b.rows; }
};

// Plain explicit-network view {W_k, b_k} of a realized model together with
// the diagonal multipliers Lambda_k = Psi_k^2 that certify it.
struct ExtractedWeights {
  double gamma = 1.0;
  std::vector<Matrix> w;       // L+1 weight matrices
  std::vector<Matrix> b;       // L+1 bias vectors
  std::vector<Matrix> lambda;  // L diagonal vectors, (n_{k+1}) x 1
};

// Applies the transform to every layer. Throws on nonconforming shapes,
// non-finite entries, or gamma <= 0.
RealizedModel realize(const DirectParams& p);

// One hidden sandwich layer on a batch (columns of h_in are samples):
//   h_out = sqrt(2) A^T Psi sigma( sqrt(2) Psi^{-1} B h_in + b ).
Matrix sandwich_apply(const RealizedLayer& layer, const Matrix& h_in, Activation act);

// Full network: input scaling sqrt(gamma), hidden sandwich layers, then
// y = sqrt(gamma) B_L h + b_L.
Matrix forward(const RealizedModel& m, const Matrix& x, Activation act);

// Converts a realized model into explicit weights,
//   W_k = 2 Psi_k^{-1} B_k A_{k-1}^T Psi_{k-1},
// with the fixed boundary scalings folded into the first and last layers.
ExtractedWeights extract_weights(const RealizedModel& m);

// Runs the explicit network z_{k+1} = sigma(W_k z_k + b_k), y = W_L z_L + b_L.
// Used to cross-check that realized models compute the same function.
Matrix explicit_forward(const ExtractedWeights& w, const Matrix& x, Activation act);

// Random initialization: X, Y entries ~ N(0, 1/sqrt(fan-in)), d = 0, b = 0,
// g = |X|_F, h = |Y|_F (so the rescaling starts as the identity).
// widths = [n_0, n_1, ..., n_{L+1}].
DirectParams init_params(const std::vector<int>& widths, double gamma, uint64_t seed);

}  // namespace lbnet
