#pragma once

#include <optional>
#include <vector>

#include "mlmfg/linalg.hpp"
#include "mlmfg/model.hpp"

namespace mlmfg {

/// w = (y, z, lambda): follower strategies, constraint slacks and
/// multipliers of g(x, y) <= 0.
struct FollowerState {
  Vector y;
  Vector z;
  Vector lambda;

  /// (y, z, lambda) stacked into one (m + 2l)-vector.
  Vector stacked() const;
  static FollowerState from_stacked(const Vector& w, int m, int l);
};

/// Blocks of grad_w H_eps in the transposed-Jacobian convention.
///
///   L  = grad_y G + sum_i lambda_i grad^2_yy g_i      (m x m)
///   A  = grad_y g                                      (m x l)
///   Lp = grad_x G + sum_i lambda_i grad^2_xy g_i      (n x m)
///   Ap = grad_x g                                      (n x l)
///   Xi = d phi_eps / d z,  Hd = d phi_eps / d lambda   (l, diagonal)
struct KktJacobianBlocks {
  Matrix L;
  Matrix A;
  Matrix Lp;
  Matrix Ap;
  Vector Xi;
  Vector Hd;

  /// [[L, A, 0], [0, I, diag(Xi)], [A', 0, diag(Hd)]], the transpose of the
  /// ordinary Jacobian of H_eps with respect to w.
  Matrix system_matrix() const;
  /// [Lp, Ap, 0], n x (m + 2l).
  Matrix parameter_matrix() const;
};

struct DegeneracyReport {
  std::vector<int> zero_plus;  // z_i <= tol < lambda_i
  std::vector<int> zero_zero;  // both <= tol
  std::vector<int> plus_zero;  // lambda_i <= tol < z_i
  std::vector<int> interior;   // both > tol
  double tol = 0.0;
};

struct FollowerSolverOptions {
  /// Residual tolerance is tol_newton_scale * (m + 2l) in the inf-norm.
  double tol_newton_scale = 1e-10;
  double tol_comp = 1e-8;
  int max_iterations = 100;
  double armijo_sigma = 1e-4;
  double armijo_beta = 0.5;
  double min_step = 1e-12;
};

struct FollowerSolution {
  FollowerState state;
  int iterations = 0;
  /// ||H_eps(x, w)||_inf at the returned state.
  double residual = 0.0;
  /// max_i |z_i lambda_i - eps^2|.
  double comp_error = 0.0;
  /// ||H_eps||_inf after every accepted iterate, starting with the initial point.
  std::vector<double> residual_history;
};

/// [G(x,y) + grad_y g(x,y) lambda; g(x,y) + z; phi_eps(lambda_i, z_i)].
Vector assemble_H(const GameModel& model, const Vector& x, const FollowerState& w, double eps);

KktJacobianBlocks assemble_jacobians(const GameModel& model, const Vector& x, const FollowerState& w, double eps);

/// Newton's method with Armijo backtracking on 1/2 ||H_eps||^2 for the
/// unique root of H_eps(x, .) (eps > 0). Throws SolverError on failure.
FollowerSolution solve_followers(const GameModel& model, const Vector& x, double eps,
                                 const std::optional<FollowerState>& warm = std::nullopt,
                                 const FollowerSolverOptions& options = {});

struct ResponseJacobian {
  /// grad w_eps(x), n x (m + 2l).
  Matrix dw;
  int m = 0;
  /// grad y_eps(x): the first m columns of dw.
  Matrix dy() const { return dw.leftCols(m); }
};

/// Implicit-function derivative of the follower response at a solved state.
ResponseJacobian response_jacobian(const GameModel& model, const Vector& x, const FollowerState& w, double eps);

/// 1e-6 * max(1, ||(z, lambda)||_inf).
double default_degeneracy_tol(const FollowerState& w);

DegeneracyReport classify_degeneracy(const FollowerState& w, double tol);

/// max_i |z_i lambda_i - eps^2|.
double complementarity_error(const FollowerState& w, double eps);

}  // namespace mlmfg
