#include "mlmfg/leader_vi.hpp"

#include <cmath>

#include <fmt/format.h>

#include "mlmfg/errors.hpp"
#include "mlmfg/polyhedron.hpp"
#include "mlmfg/smoothing.hpp"

namespace mlmfg {

namespace {

struct Evaluation {
  LeaderState v;
  LeaderFieldValue value;
  Vector F_hat;
  Vector psi;
  double merit = 0.0;
};

Evaluation evaluate(const GameModel& model, const LeaderState& v, double eps, const std::optional<FollowerState>& warm,
                    const FollowerSolverOptions& follower_options) {
  Evaluation e;
  e.v = v;
  e.value = leader_field(model, v.x, eps, warm, follower_options);
  e.F_hat = ncp_map(model, v, e.value.field);
  const Vector stacked = v.stacked();
  e.psi.resize(stacked.size());
  for (Eigen::Index i = 0; i < stacked.size(); ++i) e.psi(i) = fb(stacked(i), e.F_hat(i));
  e.merit = 0.5 * e.psi.squaredNorm();
  return e;
}

// Jacobian of F_hat, with the F_eps block by central differences.
Matrix ncp_map_jacobian(const GameModel& model, const Vector& x, double eps, const FollowerState& base,
                        double fd_step, const FollowerSolverOptions& follower_options, int* follower_iterations) {
  const LeaderConstraints& lc = model.leader_constraints();
  const Eigen::Index n = x.size();
  const Eigen::Index p = lc.b.size();
  Matrix J = Matrix::Zero(n + p, n + p);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = fd_step * std::max(1.0, std::abs(x(j)));
    Vector xp = x;
    Vector xm = x;
    xp(j) += h;
    xm(j) -= h;
    const LeaderFieldValue fp = leader_field(model, xp, eps, base, follower_options);
    const LeaderFieldValue fm = leader_field(model, xm, eps, base, follower_options);
    if (follower_iterations != nullptr) {
      *follower_iterations += fp.followers.iterations + fm.followers.iterations;
    }
    J.block(0, j, n, 1) = (fp.field - fm.field) / (xp(j) - xm(j));
  }
  J.topRightCorner(n, p) = lc.A.transpose();
  J.bottomLeftCorner(p, n) = -lc.A;
  return J;
}

Matrix psi_jacobian(const Vector& v, const Vector& F_hat, const Matrix& F_hat_jac) {
  Matrix J = F_hat_jac;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const FbGradient g = fb_gradient(v(i), F_hat(i), 0.0);
    J.row(i) *= g.db;
    J(i, i) += g.da;
  }
  return J;
}

void polish(const GameModel& model, double eps, const LeaderSolverOptions& options, double threshold,
            Evaluation& cur, LeaderSolution& sol) {
  const Vector v = cur.v.stacked();
  try {
    const Matrix JF = ncp_map_jacobian(model, cur.v.x, eps, cur.value.followers.state, options.fd_step,
                                       options.follower, &sol.follower_iterations);
    const Vector d = solve_dense(psi_jacobian(v, cur.F_hat, JF), Vector(-cur.psi), "semismooth Newton polish");
    Vector moved = v + d;
    if (options.project_nonnegative) moved = moved.cwiseMax(0.0);
    Evaluation trial = evaluate(model, LeaderState::from_stacked(moved, static_cast<int>(cur.v.x.size()),
                                                                 static_cast<int>(cur.v.mu.size())),
                                eps, cur.value.followers.state, options.follower);
    sol.follower_iterations += trial.value.followers.iterations;
    const double nr = natural_residual(moved, trial.F_hat);
    if (trial.merit < cur.merit && nr < threshold) {
      cur = std::move(trial);
      sol.natural_residual = nr;
      sol.polished = true;
    }
  } catch (const SolverError&) {
    // the unpolished point already meets the stopping test
  }
}

}  // namespace

Vector LeaderState::stacked() const {
  Vector out(x.size() + mu.size());
  out << x, mu;
  return out;
}

LeaderState LeaderState::from_stacked(const Vector& v, int n, int p) {
  require_size(v, n + p, "stacked leader state");
  return LeaderState{v.head(n), v.tail(p)};
}

LeaderFieldValue leader_field(const GameModel& model, const Vector& x, double eps,
                              const std::optional<FollowerState>& warm,
                              const FollowerSolverOptions& follower_options) {
  const Dimensions& d = model.dims();
  LeaderFieldValue out;
  out.followers = solve_followers(model, x, eps, warm, follower_options);
  const Vector& y = out.followers.state.y;
  const Matrix dy = response_jacobian(model, x, out.followers.state, eps).dy();
  out.field.resize(d.n());
  for (int nu = 0; nu < d.n_leaders(); ++nu) {
    const int off = d.leader_offset(nu);
    const int nn = d.leader_dims[nu];
    out.field.segment(off, nn) =
        model.leader_grad_x(nu, x, y) + dy.middleRows(off, nn) * model.leader_grad_y(nu, x, y);
  }
  return out;
}

Vector ncp_map(const GameModel& model, const LeaderState& v, const Vector& field) {
  const LeaderConstraints& lc = model.leader_constraints();
  require_size(v.x, model.dims().n(), "v.x");
  require_size(v.mu, lc.b.size(), "v.mu");
  require_size(field, v.x.size(), "leader field");
  Vector out(v.x.size() + v.mu.size());
  out << field + lc.A.transpose() * v.mu, lc.b - lc.A * v.x;
  return out;
}

Vector ncp_map(const GameModel& model, const LeaderState& v, double eps, const std::optional<FollowerState>& warm) {
  return ncp_map(model, v, leader_field(model, v.x, eps, warm).field);
}

Vector ncp_residual(const GameModel& model, const LeaderState& v, double eps, const std::optional<FollowerState>& warm) {
  return evaluate(model, v, eps, warm, {}).psi;
}

Matrix ncp_jacobian(const GameModel& model, const LeaderState& v, double eps, const std::optional<FollowerState>& warm,
                    double fd_step) {
  const Evaluation e = evaluate(model, v, eps, warm, {});
  const Matrix JF = ncp_map_jacobian(model, v.x, eps, e.value.followers.state, fd_step, {}, nullptr);
  return psi_jacobian(v.stacked(), e.F_hat, JF);
}

LeaderSolution solve_leader_ncp(const GameModel& model, double eps, const LeaderState& v0,
                                const LeaderSolverOptions& options, const std::optional<FollowerState>& warm) {
  if (!(eps > 0.0)) throw std::invalid_argument(fmt::format("solve_leader_ncp: eps must be positive, got {}", eps));
  const int n = model.dims().n();
  const int p = static_cast<int>(model.leader_constraints().b.size());
  require_size(v0.x, n, "v0.x");
  require_size(v0.mu, p, "v0.mu");
  const double threshold = options.tol_scale * (n + p);

  LeaderSolution sol;
  Evaluation cur = evaluate(model, v0, eps, warm, options.follower);
  sol.follower_iterations += cur.value.followers.iterations;

  for (int it = 0;; ++it) {
    const Vector v = cur.v.stacked();
    const double nr = natural_residual(v, cur.F_hat);
    if (nr < threshold) {
      sol.natural_residual = nr;
      if (options.polish) polish(model, eps, options, threshold, cur, sol);
      break;
    }
    if (it >= options.max_iterations) {
      throw SolverError(SolverErrorKind::MaxIterations,
                        fmt::format("semismooth Newton did not reach {:.3e} in {} iterations (eps = {:.6g})",
                                    threshold, it, eps),
                        nr);
    }

    const Matrix JF = ncp_map_jacobian(model, cur.v.x, eps, cur.value.followers.state, options.fd_step,
                                       options.follower, &sol.follower_iterations);
    const Matrix J = psi_jacobian(v, cur.F_hat, JF);
    const Vector grad = J.transpose() * cur.psi;

    std::optional<Vector> newton;
    try {
      Vector d = solve_dense(J, Vector(-cur.psi), "semismooth Newton system");
      if (d.dot(grad) < -options.descent_tol * d.norm() * grad.norm()) newton = std::move(d);
    } catch (const SolverError& e) {
      if (e.kind() != SolverErrorKind::LinearSolveFailure) throw;
      ++sol.newton_solve_failures;
    }

    auto line_search = [&](const Vector& d, DirectionType type) -> std::optional<Evaluation> {
      double t = 1.0;
      for (int k = 0; k <= options.max_backtracks; ++k, t *= options.armijo_beta) {
        Vector moved = v + t * d;
        if (options.project_nonnegative) moved = moved.cwiseMax(0.0);
        // Along a projected path the predicted decrease uses the actual displacement.
        const double slope = grad.dot(moved - v);
        if (!(slope < 0.0)) continue;
        const LeaderState trial_v = LeaderState::from_stacked(moved, n, p);
        Evaluation trial;
        try {
          trial = evaluate(model, trial_v, eps, cur.value.followers.state, options.follower);
        } catch (const SolverError&) {
          ++sol.rejected_trials;
          continue;
        }
        sol.follower_iterations += trial.value.followers.iterations;
        if (std::isfinite(trial.merit) && trial.merit <= cur.merit + options.armijo_sigma * slope) {
          sol.trace.push_back(LeaderIterate{it, trial.merit, 0.0, t, type});
          return trial;
        }
      }
      return std::nullopt;
    };

    std::optional<Evaluation> next;
    if (newton) next = line_search(*newton, DirectionType::Newton);
    if (!next) next = line_search(Vector(-grad), DirectionType::Gradient);
    if (!next) {
      throw SolverError(SolverErrorKind::LineSearchFailure,
                        fmt::format("no sufficient decrease of the merit function at iteration {} (eps = {:.6g})", it,
                                    eps),
                        nr);
    }
    cur = std::move(*next);
    sol.trace.back().natural_residual = natural_residual(cur.v.stacked(), cur.F_hat);
    ++sol.iterations;
  }

  sol.state = cur.v;
  sol.followers = cur.value.followers.state;
  sol.field = cur.value.field;
  sol.merit = cur.merit;
  return sol;
}

double vi_residual(const GameModel& model, const Vector& x, const Vector& field) {
  return projection_residual(with_nonnegativity(model.leader_constraints()), x, field);
}

}  // namespace mlmfg
