#pragma once

#include <stdexcept>
#include <string>

namespace ocd {

/// A state with a non-finite field was passed to the dynamics.
class InvalidStateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A list argument had the wrong length (controls vs. cars, empty rollout, ...).
class ArityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Weight normalization was asked to scale a zero vector.
class NormalizationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Bad scenario id, malformed config file, or an invalid parameter value.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ocd
