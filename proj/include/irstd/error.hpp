#pragma once

#include <stdexcept>
#include <string>

namespace irstd {

// Argument validation failures use std::invalid_argument directly. The types
// below cover the remaining failure classes callers need to tell apart.

/// Numerical routine failed (SVD did not converge, non-finite intermediate).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation invoked on an object in the wrong state (e.g. backward before forward).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// File or corpus could not be read; the message names the offending path.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Synthetic scene generation could not satisfy its configuration.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace irstd
