#pragma once

#include "lbnet/autodiff.hpp"
#include "lbnet/sandwich.hpp"

// Tape-recorded versions of the realize + forward pipeline. They compute
// exactly what realize()/forward() compute, but leave every free parameter
// (or the network input) differentiable.
namespace lbnet {

// Tape handles for one layer's free parameters. d is only valid on hidden
// layers; the output layer's scale is pinned by gamma.
struct TapedLayer {
  ad::Var x;
  ad::Var y;
  ad::Var b;
  ad::Var g;  // 1x1
  ad::Var h;  // 1x1
  ad::Var d;
};

struct TapedParams {
  double gamma = 1.0;
  std::vector<TapedLayer> layers;
};

// Registers every free parameter of p as a leaf.
TapedParams make_leaves(ad::Tape& t, const DirectParams& p);

// Records the realized forward pass: the orthogonal-pair transform of every
// layer followed by the sandwich evaluation. input is n_0 x batch.
ad::Var taped_forward(ad::Tape& t, const TapedParams& tp, ad::Var input, Activation act);

// Forward pass of an already-realized model with all weights as constants,
// so gradients flow only into the input. Used by the bound-probing search.
ad::Var taped_forward_const(ad::Tape& t, const RealizedModel& m, ad::Var input, Activation act);

// Single stages of the constant-weight forward pass, for per-layer probing.
ad::Var taped_sandwich_const(ad::Tape& t, const RealizedLayer& layer, ad::Var h, Activation act);
ad::Var taped_output_const(ad::Tape& t, const RealizedLayer& out, double gamma, ad::Var h);

// Mean of squared entries of (pred - target), 1x1.
ad::Var mse(ad::Tape& t, ad::Var pred, ad::Var target);

}  // namespace lbnet
