#pragma once

// Shared helpers for the suites: small literal constructors, max-abs
// comparison, and a parameter factory with every field away from zero
// (init_params deliberately zeroes d and b).

#include <initializer_list>
#include <vector>

#include "lbnet/rng.hpp"
#include "lbnet/sandwich.hpp"

namespace testsup {

inline lbnet::Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r == 0 ? 0 : static_cast<int>(rows.begin()->size());
  lbnet::Matrix m(r, c);
  int i = 0;
  for (const auto& row : rows) {
    int j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline lbnet::Matrix colvec(std::initializer_list<double> entries) {
  lbnet::Matrix m(static_cast<int>(entries.size()), 1);
  int i = 0;
  for (double v : entries) m(i++, 0) = v;
  return m;
}

inline double diff(const lbnet::Matrix& a, const lbnet::Matrix& b) {
  REQUIRE(a.rows == b.rows);
  REQUIRE(a.cols == b.cols);
  return lbnet::max_abs(a - b);
}

inline double cdiff(const lbnet::ComplexMatrix& a, const lbnet::ComplexMatrix& b) {
  REQUIRE(a.rows == b.rows);
  REQUIRE(a.cols == b.cols);
  return lbnet::max_abs(a - b);
}

// Random parameters with nonzero biases and log-scales.
inline lbnet::DirectParams scrambled_params(const std::vector<int>& widths, double gamma,
                                            uint64_t seed) {
  lbnet::DirectParams p = lbnet::init_params(widths, gamma, seed);
  lbnet::Rng rng(seed ^ 0x5bf03635u);
  for (auto& l : p.layers) {
    for (auto& v : l.b.data) v = 0.5 * rng.normal();
    l.g *= 0.5 + rng.uniform();
    l.h *= 0.5 + rng.uniform();
  }
  for (auto& d : p.hidden_scales)
    for (auto& v : d.data) v = 0.3 * rng.normal();
  return p;
}

}  // namespace testsup
