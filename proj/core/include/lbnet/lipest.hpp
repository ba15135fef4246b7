#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lbnet/autodiff.hpp"
#include "lbnet/sandwich.hpp"

namespace lbnet {

// A differentiable map recorded onto a caller-provided tape: takes the input
// variable, returns the output variable.
using DiffMap = std::function<ad::Var(ad::Tape&, ad::Var)>;

struct LipSettings {
  int restarts = 32;
  int iters = 500;
  double step = 0.05;  // ascent step, cosine-decayed to zero over the chain
  uint64_t seed = 99;
};

struct LipEstimate {
  double lower = 0.0;    // max over restarts of the final difference quotient
  int nan_restarts = 0;  // chains abandoned because a gradient went non-finite
};

// Lower-bounds the Lipschitz constant of f by ascending the difference
// quotient |f(x+dx) - f(x)| / |dx| over x and dx jointly with normalized
// gradient steps. x starts at standard normal draws and is never projected;
// dx starts at norm 0.1 and is kept at norm >= 1e-6. Each restart reports
// its final ratio; the estimate is the max over restarts, so it can only
// improve with more restarts and is always a true lower bound.
LipEstimate empirical_lipschitz(const DiffMap& f, int input_dim, const LipSettings& s);

// The same ascent on a realized model's forward map.
LipEstimate empirical_lipschitz(const RealizedModel& m, Activation act, const LipSettings& s);

// Empirical lower bound divided by the certified gamma, clamped to [0, 1].
double tightness(const RealizedModel& m, Activation act, const LipSettings& s);

// Certified vs observed bound per stage: one row per hidden (sandwich)
// layer, whose certified constant is 1, plus the output stage at sqrt(gamma).
// The input scaling sqrt(gamma) is exact and not probed.
struct LayerBound {
  int layer = 0;  // 0..depth-1 hidden, depth = output stage
  double certified = 0.0;
  double observed = 0.0;
};
std::vector<LayerBound> per_layer_bounds(const RealizedModel& m, Activation act,
                                         const LipSettings& s);

}  // namespace lbnet
