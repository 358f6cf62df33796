#pragma once

#include <optional>
#include <vector>

#include "mlmfg/follower_solver.hpp"
#include "mlmfg/linalg.hpp"
#include "mlmfg/model.hpp"

namespace mlmfg {

/// v = (x, mu): stacked leader strategies and multipliers of A x <= b.
struct LeaderState {
  Vector x;
  Vector mu;

  Vector stacked() const;
  static LeaderState from_stacked(const Vector& v, int n, int p);
};

struct LeaderFieldValue {
  /// F_eps(x) = (grad_{x^nu} Theta^nu_eps(x))_nu, an n-vector.
  Vector field;
  FollowerSolution followers;
};

/// Gradient field of the smoothed reduced leader objectives
///   Theta^nu_eps(x) = theta^nu(x, y_eps(x)),
/// i.e. grad_{x^nu} theta^nu + grad_{x^nu} y_eps * grad_y theta^nu for each nu.
LeaderFieldValue leader_field(const GameModel& model, const Vector& x, double eps,
                              const std::optional<FollowerState>& warm = std::nullopt,
                              const FollowerSolverOptions& follower_options = {});

/// F_hat(v) = [F_eps(x) + A' mu; b - A x].
Vector ncp_map(const GameModel& model, const LeaderState& v, const Vector& field);
Vector ncp_map(const GameModel& model, const LeaderState& v, double eps,
               const std::optional<FollowerState>& warm = std::nullopt);

/// Psi(v)_i = fb(v_i, F_hat_i(v)).
Vector ncp_residual(const GameModel& model, const LeaderState& v, double eps,
                    const std::optional<FollowerState>& warm = std::nullopt);

/// An element of the generalized Jacobian of Psi (ordinary row layout).
/// grad F_eps comes from central differences with step
/// fd_step * max(1, |x_j|); the A' and -A blocks are exact.
Matrix ncp_jacobian(const GameModel& model, const LeaderState& v, double eps,
                    const std::optional<FollowerState>& warm = std::nullopt, double fd_step = 1e-5);

enum class DirectionType { Newton, Gradient };

struct LeaderIterate {
  int iteration = 0;
  double merit = 0.0;
  double natural_residual = 0.0;
  double step = 0.0;
  DirectionType direction = DirectionType::Newton;
};

struct LeaderSolverOptions {
  /// Success when ||min(v, F_hat(v))||_inf < tol_scale * (n + p).
  double tol_scale = 1e-6;
  int max_iterations = 200;
  double armijo_sigma = 1e-4;
  double armijo_beta = 0.5;
  int max_backtracks = 40;
  double fd_step = 1e-5;
  /// Newton directions with d'grad < -descent_tol ||d|| ||grad|| count as descent.
  double descent_tol = 1e-12;
  /// Keep iterates in v >= 0 by projecting each line-search trial point.
  bool project_nonnegative = true;
  /// After the stopping test passes, try one full Newton step and keep it
  /// when it lowers the merit without breaking the stopping test.
  bool polish = true;
  FollowerSolverOptions follower;
};

struct LeaderSolution {
  LeaderState state;
  /// Follower equilibrium and leader field at the returned state.
  FollowerState followers;
  Vector field;
  double natural_residual = 0.0;
  double merit = 0.0;
  int iterations = 0;
  /// Follower Newton iterations summed over every evaluation.
  int follower_iterations = 0;
  /// Semismooth Newton systems that could not be factorized.
  int newton_solve_failures = 0;
  /// Line-search trial points at which the follower solve failed.
  int rejected_trials = 0;
  /// The polishing step was taken (not counted in `iterations`).
  bool polished = false;
  std::vector<LeaderIterate> trace;
};

/// Semismooth Newton method for Psi(v) = 0 with Armijo search on
/// 1/2 ||Psi||^2. Falls back to the merit's steepest-descent direction when
/// the Newton direction is unavailable, not a descent direction, or fails the
/// line search. Throws SolverError on failure.
LeaderSolution solve_leader_ncp(const GameModel& model, double eps, const LeaderState& v0,
                                const LeaderSolverOptions& options = {},
                                const std::optional<FollowerState>& warm = std::nullopt);

/// ||x - Proj_X(x - F)||_inf over X = {A x <= b, x >= 0}.
double vi_residual(const GameModel& model, const Vector& x, const Vector& field);

}  // namespace mlmfg
