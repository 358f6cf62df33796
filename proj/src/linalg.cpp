#include "mlmfg/linalg.hpp"

#include <fmt/format.h>

#include "mlmfg/errors.hpp"

namespace mlmfg {

Matrix solve_dense(const Matrix& system, const Matrix& rhs, const char* context) {
  if (system.rows() != system.cols() || system.rows() != rhs.rows()) {
    throw DimensionError(fmt::format("{}: system {}x{} incompatible with rhs {}x{}", context,
                                     system.rows(), system.cols(), rhs.rows(), rhs.cols()));
  }
  if (!system.allFinite()) {
    throw SolverError(SolverErrorKind::LinearSolveFailure, fmt::format("{}: non-finite system matrix", context),
                      std::numeric_limits<double>::quiet_NaN());
  }
  const Eigen::PartialPivLU<Matrix> lu(system);
  const double rcond = lu.rcond();
  if (!(rcond > kSingularRcond)) {
    throw SolverError(SolverErrorKind::LinearSolveFailure,
                      fmt::format("{}: singular system matrix (rcond {:.3e})", context, rcond), rcond);
  }
  Matrix result = lu.solve(rhs);
  if (!result.allFinite()) {
    throw SolverError(SolverErrorKind::LinearSolveFailure, fmt::format("{}: non-finite solution", context), rcond);
  }
  return result;
}

Vector solve_dense(const Matrix& system, const Vector& rhs, const char* context) {
  return solve_dense(system, Matrix(rhs), context).col(0);
}

void require_size(const Vector& v, Eigen::Index expected, const char* name) {
  if (v.size() != expected) {
    throw DimensionError(fmt::format("{}: expected length {}, got {}", name, expected, v.size()));
  }
}

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(fmt::format("{}: expected {}x{}, got {}x{}", name, rows, cols, m.rows(), m.cols()));
  }
}

}  // namespace mlmfg
