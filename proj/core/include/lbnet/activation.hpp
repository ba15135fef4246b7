#pragma once

#include <cmath>
#include <string>

#include "lbnet/error.hpp"

namespace lbnet {

// All supported nonlinearities have slopes inside [0, 1], which is what the
// layer certificates assume.
enum class Activation { Relu, Identity, Tanh };

inline double activate(Activation a, double x) {
  switch (a) {
    case Activation::Relu: return x > 0.0 ? x : 0.0;
    case Activation::Identity: return x;
    case Activation::Tanh: return std::tanh(x);
  }
  return x;
}

// Derivative; the kink of relu reports slope 0.
inline double activate_slope(Activation a, double x) {
  switch (a) {
    case Activation::Relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::Identity: return 1.0;
    case Activation::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
  }
  return "relu";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "identity") return Activation::Identity;
  if (s == "tanh") return Activation::Tanh;
  throw Error(ErrorKind::Schema, "unknown activation: " + s);
}

}  // namespace lbnet
