#pragma once

#include <stdexcept>
#include <string>

namespace lbnet {

// Every failure the library can signal, so callers can branch on kind
// instead of parsing messages.
enum class ErrorKind {
  Dimension,      // shapes do not conform
  Singular,       // pivot collapsed / matrix not invertible
  Convergence,    // iteration budget exhausted
  Domain,         // input outside the documented domain
  NonInvertible,  // transform undefined for this input (eigenvalue at -1)
  Infeasible,     // certificate precondition violated
  Internal,       // internal consistency check tripped
  Seeding,        // bounded random retries exhausted
  Diverged,       // optimization produced non-finite values
  Io,             // file could not be read/written
  Schema,         // document parsed but does not match the expected layout
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Singular: return "singular";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::NonInvertible: return "non_invertible";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::Internal: return "internal";
    case ErrorKind::Seeding: return "seeding";
    case ErrorKind::Diverged: return "diverged";
    case ErrorKind::Io: return "io";
    case ErrorKind::Schema: return "schema";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Non-convergence carries the last iterate so a caller can still inspect
// how far the iteration got.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, double last_value)
      : Error(ErrorKind::Convergence, message), last_value_(last_value) {}
  double last_value() const { return last_value_; }

 private:
  double last_value_;
};

}  // namespace lbnet
