#pragma once

#include <stdexcept>
#include <string>

namespace lru {

// Base class for everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent user input (config files, CLI flags, bad indices).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Hilbert space larger than the configured memory budget.
class InstanceTooLarge : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Numerical failure during propagation or integration.
class NumericError : public Error {
 public:
  using Error::Error;
};

class KrylovNonConvergence : public NumericError {
 public:
  KrylovNonConvergence(const std::string& what, double residual)
      : NumericError(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// Raised by callers that require a converged fit (the fitter itself only flags).
class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace lru
