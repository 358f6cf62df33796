#include "mlmfg/homotopy.hpp"

#include <chrono>
#include <cmath>

#include <fmt/format.h>

namespace mlmfg {

void Schedule::check() const {
  if (!(eps0 > 0.0)) throw std::invalid_argument(fmt::format("schedule: eps0 must be positive, got {}", eps0));
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw std::invalid_argument(fmt::format("schedule: ratio must lie in (0, 1), got {}", ratio));
  }
  if (steps < 1) throw std::invalid_argument(fmt::format("schedule: steps must be >= 1, got {}", steps));
}

double Schedule::eps(int k) const { return eps0 * std::pow(ratio, k); }

HomotopyFailure::HomotopyFailure(int k, const SolverError& cause, HomotopyTrajectory partial)
    : SolverError(cause.kind(), fmt::format("homotopy step {}: {}", k, cause.what()), cause.residual()),
      step_(k),
      partial_(std::move(partial)) {}

HomotopyTrajectory run_homotopy(const GameModel& model, const Schedule& schedule, const Vector& x0,
                                const HomotopyOptions& options) {
  schedule.check();
  require_size(x0, model.dims().n(), "x0");
  if (!x0.allFinite()) throw std::invalid_argument("x0 must be finite");

  HomotopyTrajectory traj;
  LeaderState v{x0, Vector::Zero(model.leader_constraints().b.size())};
  std::optional<FollowerState> warm;
  bool retried = false;

  for (int k = 0; k < schedule.steps; ++k) {
    const double eps = schedule.eps(k);
    const auto start = std::chrono::steady_clock::now();
    LeaderSolution sol;
    try {
      sol = solve_leader_ncp(model, eps, v, options.leader, warm);
    } catch (const SolverError& e) {
      if (!options.retry_halve || retried || k == 0) throw HomotopyFailure(k, e, traj);
      retried = true;
      try {
        const double mid = 0.5 * (schedule.eps(k - 1) + eps);
        const LeaderSolution bridge = solve_leader_ncp(model, mid, v, options.leader, warm);
        sol = solve_leader_ncp(model, eps, bridge.state, options.leader, bridge.followers);
      } catch (const SolverError& again) {
        throw HomotopyFailure(k, again, traj);
      }
    }
    const auto stop = std::chrono::steady_clock::now();

    HomotopyRecord rec;
    rec.k = k;
    rec.eps = eps;
    rec.x = sol.state.x;
    rec.mu = sol.state.mu;
    rec.y = sol.followers.y;
    rec.z = sol.followers.z;
    rec.lambda = sol.followers.lambda;
    rec.ncp_residual = sol.natural_residual;
    rec.vi_residual = vi_residual(model, sol.state.x, sol.field);
    rec.follower_comp_error = complementarity_error(sol.followers, eps);
    rec.newton_iters_leader = sol.iterations;
    rec.newton_iters_follower = sol.follower_iterations;
    rec.newton_solve_failures = sol.newton_solve_failures;
    rec.rejected_trials = sol.rejected_trials;
    rec.wall_time = std::chrono::duration<double>(stop - start).count();
    traj.records.push_back(std::move(rec));

    v = sol.state;
    warm = sol.followers;
  }
  return traj;
}

StationarityReport stationarity_report(const GameModel& model, double eps, const Vector& x,
                                       std::optional<double> cauchy_tail) {
  StationarityReport report;
  report.eps_final = eps;
  report.x_final = x;
  const LeaderFieldValue value = leader_field(model, x, eps);
  const FollowerState& w = value.followers.state;
  report.projection_residual = vi_residual(model, x, value.field);
  report.comp_product_error = complementarity_error(w, eps);
  report.degeneracy = classify_degeneracy(w, default_degeneracy_tol(w));
  report.strict_complementarity = classify_degeneracy(w, 10.0 * eps).zero_zero.empty();
  report.cauchy_tail = cauchy_tail;
  report.label = report.strict_complementarity
                     ? "approximate B-stationary Nash equilibrium (strict complementarity: B- and C-stationarity "
                       "coincide)"
                     : "approximate C-stationary Nash equilibrium (degenerate follower constraints present)";
  return report;
}

StationarityReport stationarity_report(const GameModel& model, const HomotopyTrajectory& trajectory) {
  if (trajectory.records.empty()) throw std::invalid_argument("stationarity_report: empty trajectory");
  const auto& recs = trajectory.records;
  std::optional<double> tail;
  if (recs.size() >= 2) {
    double worst = 0.0;
    const std::size_t first = recs.size() > 10 ? recs.size() - 10 : 1;
    for (std::size_t k = first; k < recs.size(); ++k) {
      worst = std::max(worst, (recs[k].x - recs[k - 1].x).lpNorm<Eigen::Infinity>());
    }
    tail = worst;
  }
  return stationarity_report(model, recs.back().eps, recs.back().x, tail);
}

}  // namespace mlmfg
