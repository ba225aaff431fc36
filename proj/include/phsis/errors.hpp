#pragma once

#include <stdexcept>
#include <string>

namespace phsis {

/// Input or configuration is malformed (CLI exit code 2).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A mathematical precondition does not hold, e.g. a reducible adjacency
/// where irreducibility is required (CLI exit code 3).
class PreconditionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An iterative method failed to converge (CLI exit code 4).
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace phsis
