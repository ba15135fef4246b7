#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lbnet/sandwich.hpp"

namespace lbnet {

// Produces parameters (X, Y) whose realized linear layer reproduces a given
// weight exactly: cayley(X, Y) yields (A, B) with 2 A^T B = W. Requires
// |W| <= 1 (up to 1e-10 slack); the free rotation is drawn from the seed
// and redrawn (bounded retries) when it lands the factors where the
// inverse transform degenerates.
std::pair<Matrix, Matrix> linear_from_weight(const Matrix& w, uint64_t seed);

// Recovers DirectParams from explicit weights and multipliers admitted by
// the certificate: realize() of the result reproduces every W_k. Biases are
// zero-initialized (they are not part of the certificate). Throws when the
// certificate precondition fails.
DirectParams params_from_lmi(const std::vector<Matrix>& w, const std::vector<Matrix>& lambda,
                             double gamma, uint64_t seed);

}  // namespace lbnet
