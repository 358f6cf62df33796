#include "mlmfg/errors.hpp"

namespace mlmfg {

const char* to_string(SolverErrorKind kind) {
  switch (kind) {
    case SolverErrorKind::MaxIterations:
      return "MaxIterations";
    case SolverErrorKind::LinearSolveFailure:
      return "LinearSolveFailure";
    case SolverErrorKind::DivergenceDetected:
      return "DivergenceDetected";
    case SolverErrorKind::LineSearchFailure:
      return "LineSearchFailure";
    case SolverErrorKind::NoConvergence:
      return "NoConvergence";
    case SolverErrorKind::CyclingDetected:
      return "CyclingDetected";
  }
  return "Unknown";
}

SolverError::SolverError(SolverErrorKind kind, const std::string& what, double residual)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), residual_(residual) {}

}  // namespace mlmfg
