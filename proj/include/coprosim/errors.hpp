#pragma once

#include <stdexcept>

namespace coprosim {

/// Shape or size disagreement between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A linear solve hit a singular or numerically unusable matrix.
struct SingularMatrixError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Input data cannot support the requested fit (degenerate labels,
/// rank-deficient regressors, too few samples, ...).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value; the message names the offending field path.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace coprosim
