#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mlmfg/errors.hpp"
#include "mlmfg/follower_solver.hpp"
#include "mlmfg/leader_vi.hpp"
#include "mlmfg/model.hpp"

namespace mlmfg {

/// eps_k = eps0 * ratio^k for k = 0, ..., steps - 1.
struct Schedule {
  double eps0 = 1.0;
  double ratio = 0.9;
  int steps = 75;

  /// Throws std::invalid_argument unless eps0 > 0, 0 < ratio < 1, steps >= 1.
  void check() const;
  double eps(int k) const;
};

struct HomotopyRecord {
  int k = 0;
  double eps = 0.0;
  Vector x;
  Vector mu;
  Vector y;
  Vector z;
  Vector lambda;
  double ncp_residual = 0.0;
  double vi_residual = 0.0;
  double follower_comp_error = 0.0;
  int newton_iters_leader = 0;
  int newton_iters_follower = 0;
  int newton_solve_failures = 0;
  int rejected_trials = 0;
  double wall_time = 0.0;  // seconds
};

struct HomotopyTrajectory {
  std::vector<HomotopyRecord> records;
};

struct HomotopyOptions {
  LeaderSolverOptions leader;
  /// On a failed step, retry once through the intermediate value
  /// (eps_{k-1} + eps_k) / 2 before giving up.
  bool retry_halve = false;
};

/// Solver failure at schedule index k; carries the records completed so far.
class HomotopyFailure : public SolverError {
 public:
  HomotopyFailure(int k, const SolverError& cause, HomotopyTrajectory partial);

  int step() const noexcept { return step_; }
  const HomotopyTrajectory& partial() const noexcept { return partial_; }

 private:
  int step_;
  HomotopyTrajectory partial_;
};

/// Solves the smoothed leader NCP for eps_0 > eps_1 > ... warm-starting the
/// leader multipliers and the follower state from the previous step
/// (mu starts at 0).
HomotopyTrajectory run_homotopy(const GameModel& model, const Schedule& schedule, const Vector& x0,
                                const HomotopyOptions& options = {});

struct StationarityReport {
  double eps_final = 0.0;
  Vector x_final;
  /// ||x - Proj_X(x - F_eps(x))||_inf at eps_final.
  double projection_residual = 0.0;
  /// max_i |z_i lambda_i - eps_final^2|.
  double comp_product_error = 0.0;
  DegeneracyReport degeneracy;
  /// No follower pair is degenerate at the relaxed tolerance 10 * eps_final.
  bool strict_complementarity = false;
  /// max ||x_k - x_{k-1}||_inf over the last 10 steps; empty for one record.
  std::optional<double> cauchy_tail;
  std::string label;
};

/// Recomputes all residuals at the final record with fresh solves.
StationarityReport stationarity_report(const GameModel& model, const HomotopyTrajectory& trajectory);

/// Same, for an explicit final point.
StationarityReport stationarity_report(const GameModel& model, double eps, const Vector& x,
                                       std::optional<double> cauchy_tail);

}  // namespace mlmfg
