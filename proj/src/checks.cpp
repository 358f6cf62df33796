#include "mlmfg/checks.hpp"

#include <cmath>
#include <functional>
#include <random>

#include <fmt/format.h>

#include "mlmfg/follower_solver.hpp"
#include "mlmfg/leader_vi.hpp"
#include "mlmfg/oracle.hpp"
#include "mlmfg/smoothing.hpp"

namespace mlmfg {

namespace {

class Runner {
 public:
  explicit Runner(std::vector<CheckResult>& out) : out_(out) {}

  // body returns (passed, detail).
  void run(const std::string& suite, const std::string& name,
           const std::function<std::pair<bool, std::string>()>& body) {
    CheckResult r{suite, name, false, {}};
    try {
      auto [ok, detail] = body();
      r.passed = ok;
      r.detail = std::move(detail);
    } catch (const std::exception& e) {
      r.detail = fmt::format("exception: {}", e.what());
    }
    out_.push_back(std::move(r));
  }

 private:
  std::vector<CheckResult>& out_;
};

std::string worst_vs(double worst, double bound) { return fmt::format("worst {:.3e} (bound {:.1e})", worst, bound); }

}  // namespace

double response_jacobian_error(const GameModel& model, const Vector& x, double eps, double fd_step) {
  const FollowerSolution base = solve_followers(model, x, eps);
  const Matrix J = response_jacobian(model, x, base.state, eps).dy();
  const Matrix J_fd = oracle::finite_diff_jacobian(
      [&](const Vector& xx) { return Vector(solve_followers(model, xx, eps, base.state).state.y); }, x, fd_step);
  const double scale = J.norm();
  return scale > 0.0 ? (J - J_fd).norm() / scale : (J - J_fd).norm();
}

std::vector<CheckResult> run_invariant_checks(const GameModel& model, const CheckConfig& config) {
  const Dimensions& d = model.dims();
  const int n = d.n();
  const int p = static_cast<int>(model.leader_constraints().b.size());
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unif(0.0, config.box);
  auto random_x = [&] {
    Vector x(n);
    for (int i = 0; i < n; ++i) x(i) = unif(rng);
    return x;
  };
  const Vector x0 = config.x0.size() == n ? config.x0 : Vector::Constant(n, 3.0);
  const FollowerSolverOptions fopts;
  const double tol_newton = fopts.tol_newton_scale * (d.m() + 2 * d.l());

  std::vector<CheckResult> out;
  Runner runner(out);

  // follower_solver
  runner.run("follower_solver", "KKT residual at 100 random x", [&] {
    double worst = 0.0;
    const double eps_list[] = {1.0, 0.1, 0.01};
    for (int t = 0; t < 100; ++t) {
      const Vector x = random_x();
      const double eps = eps_list[t % 3];
      const FollowerSolution s = solve_followers(model, x, eps);
      worst = std::max(worst, assemble_H(model, x, s.state, eps).lpNorm<Eigen::Infinity>());
    }
    return std::pair{worst <= tol_newton, worst_vs(worst, tol_newton)};
  });

  runner.run("follower_solver", "complementarity product z*lambda = eps^2", [&] {
    double worst = 0.0;
    for (double eps : {1.0, 0.1, 0.01, 1e-3, 1e-4}) {
      for (int t = 0; t < 20; ++t) {
        const FollowerSolution s = solve_followers(model, random_x(), eps);
        worst = std::max(worst, complementarity_error(s.state, eps) / std::max(1.0, eps * eps));
      }
    }
    return std::pair{worst <= 1e-8, worst_vs(worst, 1e-8)};
  });

  runner.run("follower_solver", "local quadratic convergence", [&] {
    double worst_c = 0.0;
    bool monotone = true;
    for (int t = 0; t < 10; ++t) {
      const Vector x = random_x();
      const double eps = 0.1;
      FollowerState w = solve_followers(model, x, eps).state;
      w.y.array() += 1e-2;
      w.z.array() += 1e-2;
      w.lambda.array() += 1e-2;
      const std::vector<double> h = solve_followers(model, x, eps, w).residual_history;
      for (std::size_t k = 0; k + 1 < h.size(); ++k) {
        if (h[k + 1] <= 1e-12) break;
        monotone = monotone && h[k + 1] < h[k];
        worst_c = std::max(worst_c, h[k + 1] / (h[k] * h[k]));
      }
    }
    const double bound = 1e3;
    return std::pair{monotone && worst_c <= bound,
                     fmt::format("max ||H||_k+1/||H||_k^2 = {:.3e} (bound {:.0e}), monotone {}", worst_c, bound,
                                 monotone)};
  });

  runner.run("follower_solver", "continuity in eps along the schedule", [&] {
    std::optional<FollowerState> prev;
    double prev_eps = 0.0;
    double max_rate = 0.0;
    bool ok = true;
    for (int k = 0; k < config.schedule.steps; ++k) {
      const double eps = config.schedule.eps(k);
      const FollowerState w = solve_followers(model, x0, eps, prev).state;
      if (prev) {
        const double rate = (w.stacked() - prev->stacked()).lpNorm<Eigen::Infinity>() / (prev_eps - eps);
        if (k > 1 && rate > 10.0 * std::max(1.0, max_rate)) ok = false;
        max_rate = std::max(max_rate, rate);
      }
      prev = w;
      prev_eps = eps;
    }
    return std::pair{ok, fmt::format("max ||dw||/|d eps| = {:.3e}", max_rate)};
  });

  // leader_vi
  std::optional<HomotopyTrajectory> traj;
  std::string traj_error;
  try {
    traj = run_homotopy(model, config.schedule, x0);
  } catch (const std::exception& e) {
    traj_error = e.what();
  }
  auto need_traj = [&] {
    if (!traj) throw std::runtime_error(traj_error);
  };

  runner.run("leader_vi", "stopping criterion re-evaluated from scratch", [&] {
    need_traj();
    const double bound = 1e-6 * (n + p);
    double worst = 0.0;
    for (const HomotopyRecord& r : traj->records) {
      const LeaderState v{r.x, r.mu};
      worst = std::max(worst, natural_residual(v.stacked(), ncp_map(model, v, r.eps)));
    }
    return std::pair{worst < bound, worst_vs(worst, bound)};
  });

  runner.run("leader_vi", "KKT point solves the VI", [&] {
    need_traj();
    double worst = 0.0;
    for (const HomotopyRecord& r : traj->records) {
      worst = std::max(worst, vi_residual(model, r.x, leader_field(model, r.x, r.eps).field));
    }
    return std::pair{worst <= 1e-5, worst_vs(worst, 1e-5)};
  });

  runner.run("leader_vi", "merit decreases on accepted iterates", [&] {
    bool ok = true;
    int steps = 0;
    for (const Vector& start : {x0, Vector(Vector::Constant(n, 10.0))}) {
      const LeaderSolution s = solve_leader_ncp(model, config.schedule.eps0, LeaderState{start, Vector::Zero(p)});
      for (std::size_t k = 1; k < s.trace.size(); ++k) ok = ok && s.trace[k].merit < s.trace[k - 1].merit;
      steps += static_cast<int>(s.trace.size());
    }
    return std::pair{ok, fmt::format("{} accepted steps from two starts", steps)};
  });

  // oracle
  runner.run("oracle", "followers: Newton (eps=1e-5) vs best response (eps=0)", [&] {
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const Vector x = random_x();
      const Vector y_newton = solve_followers(model, x, 1e-5).state.y;
      const Vector y_oracle = oracle::best_response_fixed_point(model, x, 0.0);
      worst = std::max(worst, (y_newton - y_oracle).lpNorm<Eigen::Infinity>());
    }
    return std::pair{worst <= 1e-3, worst_vs(worst, 1e-3)};
  });

  runner.run("oracle", "response Jacobian vs finite differences", [&] {
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const Vector x = random_x();
      for (double eps : {1.0, 0.1, 0.01}) worst = std::max(worst, response_jacobian_error(model, x, eps));
    }
    return std::pair{worst <= 1e-5, worst_vs(worst, 1e-5)};
  });

  runner.run("oracle", "sweep-order independence", [&] {
    const oracle::OracleConfig cfg;
    double worst = 0.0;
    for (int t = 0; t < 5; ++t) {
      const Vector x = random_x();
      const Vector fwd = oracle::best_response_fixed_point(model, x, 0.0, cfg, oracle::SweepOrder::Forward);
      const Vector rev = oracle::best_response_fixed_point(model, x, 0.0, cfg, oracle::SweepOrder::Reverse);
      worst = std::max(worst, (fwd - rev).lpNorm<Eigen::Infinity>());
    }
    return std::pair{worst <= 10.0 * cfg.fp_tol, worst_vs(worst, 10.0 * cfg.fp_tol)};
  });

  return out;
}

}  // namespace mlmfg
