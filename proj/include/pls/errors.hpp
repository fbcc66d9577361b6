#pragma once

#include <stdexcept>
#include <string>

namespace pls {

// Shape mismatch between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A target row is not a probability distribution.
class TargetDistributionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid configuration: bad hyperparameter, unknown key, strategy/dataset mismatch.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Caller broke an operation's precondition.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed file contents (bad magic, bad header).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two inputs that must agree do not (e.g. image and label counts).
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter or activation became NaN/Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pls
