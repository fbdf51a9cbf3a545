#pragma once

#include <stdexcept>
#include <string>

namespace fluidq {

// Bad input: scenario files, parameters, contract violations at the API edge.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The numerics could not deliver the requested accuracy (non-contraction,
// monotonicity violated beyond slack, negative discretized mass, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fluidq
