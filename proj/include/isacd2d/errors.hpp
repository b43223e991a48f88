#pragma once

#include <stdexcept>
#include <string>

namespace isacd2d {

/// Scenario or configuration values that break a documented invariant.
class InvalidScenario : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A dense factorization that should have succeeded did not.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The radar SINR threshold cannot be met from the SCA starting point(s).
class InfeasibleRadarConstraint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The cone solver returned something other than an optimal point.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, std::string status)
      : std::runtime_error(what), status_(std::move(status)) {}
  const std::string& status() const { return status_; }

 private:
  std::string status_;
};

/// Every Gaussian-randomization candidate violated the radar constraint.
class RandomizationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed conic program (dimension mismatch, unknown block).
class ConstructionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace isacd2d
