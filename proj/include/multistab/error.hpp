#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace multistab {

/// Invalid parameters, malformed configuration files, dimension mismatches.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Base class for failures of a numerical procedure (integration, Newton, ...).
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::vector<double> last_state = {})
      : std::runtime_error(what), last_state_(std::move(last_state)) {}

  const std::vector<double>& last_state() const noexcept { return last_state_; }

 private:
  std::vector<double> last_state_;
};

/// Step size underflow or step budget exhausted.
class DivergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Non-finite values appeared in the state.
class BlowUpError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Newton-type iteration failed to converge.
class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Newton hit a (numerically) singular Jacobian.
class SingularJacobianError : public ConvergenceError {
 public:
  using ConvergenceError::ConvergenceError;
};

}  // namespace multistab
