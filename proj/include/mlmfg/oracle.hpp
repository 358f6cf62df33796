#pragma once

#include <functional>

#include "mlmfg/linalg.hpp"
#include "mlmfg/model.hpp"

// Reference computations used to cross-check the main solvers. They share
// the model but none of the Newton/implicit-differentiation machinery, and
// trade speed for simplicity.

namespace mlmfg::oracle {

struct OracleConfig {
  /// Relative central-difference step.
  double fd_step = 1e-5;
  /// Sweep-to-sweep change below which the follower fixed point stops.
  double fp_tol = 1e-10;
  int fp_max_sweeps = 2000;
  /// Projected-gradient step; 0 selects 1 / (estimated Lipschitz constant).
  double pg_step = 0.0;
  double pg_tol = 1e-8;
  int pg_max_iters = 5000;

  /// Throws std::invalid_argument unless every field is positive (pg_step
  /// may be 0) and fd_step lies in [1e-8, 1e-3].
  void check() const;
};

/// Central differences in the transposed-Jacobian convention: column i of
/// the result is the gradient of f_i, i.e. entry (j, i) is
/// (f_i(x + h_j e_j) - f_i(x - h_j e_j)) / (2 h_j), h_j = fd_step * max(1, |x_j|).
Matrix finite_diff_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double fd_step);

enum class SweepOrder { Forward, Reverse };

/// Followers' Nash equilibrium y at fixed x by Gauss-Seidel best-response
/// sweeps. With eps = 0 each follower's block VI over its own (affine)
/// constraint set is solved by projected gradient; with eps > 0 each block's
/// smoothed KKT subsystem is solved by damped Newton. Requires g affine in y.
/// Throws SolverError(NoConvergence) after fp_max_sweeps.
Vector best_response_fixed_point(const GameModel& model, const Vector& x, double eps, const OracleConfig& cfg = {},
                                 SweepOrder order = SweepOrder::Forward);

/// Smoothed stationary Nash equilibrium of the leaders by alternating
/// per-leader projected-gradient descent on Theta^nu_eps(., x^{-nu}) with
/// finite-difference gradients through the follower solve. Throws
/// SolverError(NoConvergence | CyclingDetected).
Vector leader_oracle_equilibrium(const GameModel& model, double eps, const Vector& x0, const OracleConfig& cfg = {});

}  // namespace mlmfg::oracle
