#pragma once

#include <Eigen/Dense>

namespace mlmfg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Reciprocal condition estimate below which a dense LU factorization is
/// treated as singular.
inline constexpr double kSingularRcond = 1e-14;

/// Solves `system * result = rhs` by LU with partial pivoting. Throws
/// SolverError(LinearSolveFailure) when the matrix is numerically singular or
/// the solution is not finite. `context` is used in the message.
Matrix solve_dense(const Matrix& system, const Matrix& rhs, const char* context);
Vector solve_dense(const Matrix& system, const Vector& rhs, const char* context);

/// Throws DimensionError when `v.size() != expected`.
void require_size(const Vector& v, Eigen::Index expected, const char* name);
void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const char* name);

}  // namespace mlmfg
