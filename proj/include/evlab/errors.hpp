#pragma once

#include <stdexcept>
#include <string>

namespace evlab {

// Error taxonomy. Programming errors (bad arguments from library callers) use
// std::invalid_argument / std::logic_error; the three classes below are the
// ones the CLI maps onto distinct exit codes.

/// Malformed or inconsistent configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input data that cannot be used: malformed rows, out-of-domain values,
/// failing external compressors (exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine failed to meet its contract, e.g. quadrature that did
/// not converge (exit code 4).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A stopping rule or strategy read data it was not yet allowed to see.
class PrefixViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace evlab
