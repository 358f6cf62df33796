#pragma once

#include <stdexcept>
#include <string>

namespace mlmfg {

/// Raised when vector or matrix shapes disagree with the problem dimensions.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or incompatible instance file.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SolverErrorKind {
  MaxIterations,
  LinearSolveFailure,
  DivergenceDetected,
  LineSearchFailure,
  NoConvergence,
  CyclingDetected,
};

const char* to_string(SolverErrorKind kind);

/// Numerical failure of one of the iterative solvers. Carries the residual
/// reached when the solver gave up (NaN when not meaningful).
class SolverError : public std::runtime_error {
 public:
  SolverError(SolverErrorKind kind, const std::string& what, double residual);

  SolverErrorKind kind() const noexcept { return kind_; }
  double residual() const noexcept { return residual_; }

 private:
  SolverErrorKind kind_;
  double residual_;
};

}  // namespace mlmfg
