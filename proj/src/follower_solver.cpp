#include "mlmfg/follower_solver.hpp"

#include <cmath>

#include <fmt/format.h>

#include "mlmfg/errors.hpp"
#include "mlmfg/smoothing.hpp"

namespace mlmfg {

namespace {

void check_state(const GameModel& model, const Vector& x, const FollowerState& w) {
  const Dimensions& d = model.dims();
  require_size(x, d.n(), "x");
  require_size(w.y, d.m(), "w.y");
  require_size(w.z, d.l(), "w.z");
  require_size(w.lambda, d.l(), "w.lambda");
}

// Ordinary (untransposed) Jacobian of H_eps with respect to w.
Matrix kkt_jacobian(const KktJacobianBlocks& blocks) { return blocks.system_matrix().transpose(); }

FollowerState cold_start(const GameModel& model, const Vector& x, double eps) {
  const Dimensions& d = model.dims();
  FollowerState w;
  w.y = Vector::Zero(d.m());
  if (!(model.constraints(x, w.y).array() < 0.0).all()) {
    // One Newton step on G(x, .) = 0 from y = 0.
    const Vector G0 = model.follower_field(x, w.y);
    w.y = solve_dense(Matrix(model.follower_field_jac_y(x, w.y).transpose()), Vector(-G0),
                      "follower cold start");
  }
  w.z = Vector::Constant(d.l(), eps);
  w.lambda = Vector::Constant(d.l(), eps);
  return w;
}

}  // namespace

Vector FollowerState::stacked() const {
  Vector out(y.size() + z.size() + lambda.size());
  out << y, z, lambda;
  return out;
}

FollowerState FollowerState::from_stacked(const Vector& w, int m, int l) {
  require_size(w, m + 2 * l, "stacked follower state");
  return FollowerState{w.head(m), w.segment(m, l), w.tail(l)};
}

Matrix KktJacobianBlocks::system_matrix() const {
  const Eigen::Index m = L.rows();
  const Eigen::Index l = A.cols();
  Matrix out = Matrix::Zero(m + 2 * l, m + 2 * l);
  out.block(0, 0, m, m) = L;
  out.block(0, m, m, l) = A;
  out.block(m, m, l, l).setIdentity();
  out.block(m, m + l, l, l) = Xi.asDiagonal();
  out.block(m + l, 0, l, m) = A.transpose();
  out.block(m + l, m + l, l, l) = Hd.asDiagonal();
  return out;
}

Matrix KktJacobianBlocks::parameter_matrix() const {
  const Eigen::Index n = Lp.rows();
  const Eigen::Index m = L.rows();
  const Eigen::Index l = A.cols();
  Matrix out = Matrix::Zero(n, m + 2 * l);
  out.leftCols(m) = Lp;
  out.middleCols(m, l) = Ap;
  return out;
}

Vector assemble_H(const GameModel& model, const Vector& x, const FollowerState& w, double eps) {
  check_state(model, x, w);
  const Dimensions& d = model.dims();
  const int m = d.m();
  const int l = d.l();
  Vector H(m + 2 * l);
  H.head(m) = model.follower_field(x, w.y) + model.constraint_jac_y(x, w.y) * w.lambda;
  H.segment(m, l) = model.constraints(x, w.y) + w.z;
  for (int i = 0; i < l; ++i) H(m + l + i) = fb_smoothed(w.lambda(i), w.z(i), eps);
  return H;
}

KktJacobianBlocks assemble_jacobians(const GameModel& model, const Vector& x, const FollowerState& w, double eps) {
  check_state(model, x, w);
  const int l = model.dims().l();
  KktJacobianBlocks blocks;
  blocks.L = model.follower_field_jac_y(x, w.y) + model.constraint_hess_yy(x, w.y, w.lambda);
  blocks.A = model.constraint_jac_y(x, w.y);
  blocks.Lp = model.follower_field_jac_x(x, w.y) + model.constraint_hess_xy(x, w.y, w.lambda);
  blocks.Ap = model.constraint_jac_x(x, w.y);
  blocks.Xi.resize(l);
  blocks.Hd.resize(l);
  for (int i = 0; i < l; ++i) {
    const FbGradient g = fb_gradient(w.lambda(i), w.z(i), eps);
    blocks.Hd(i) = g.da;
    blocks.Xi(i) = g.db;
  }
  return blocks;
}

FollowerSolution solve_followers(const GameModel& model, const Vector& x, double eps,
                                 const std::optional<FollowerState>& warm, const FollowerSolverOptions& options) {
  if (!(eps > 0.0)) throw std::invalid_argument(fmt::format("solve_followers: eps must be positive, got {}", eps));
  const Dimensions& d = model.dims();
  require_size(x, d.n(), "x");
  const int m = d.m();
  const int l = d.l();
  const double tol = options.tol_newton_scale * (m + 2 * l);

  FollowerSolution sol;
  FollowerState w = warm ? *warm : cold_start(model, x, eps);
  check_state(model, x, w);
  Vector H = assemble_H(model, x, w, eps);
  double res = H.lpNorm<Eigen::Infinity>();
  sol.residual_history.push_back(res);

  // After the tolerance is met a few extra full steps are taken while they
  // keep reducing the residual; downstream finite differences rely on the
  // root being accurate well below tol.
  int polish = 0;
  for (int it = 0;; ++it) {
    if (!std::isfinite(res)) {
      throw SolverError(SolverErrorKind::DivergenceDetected, "non-finite follower KKT residual", res);
    }
    if (res <= tol) {
      if (polish >= 2 || res == 0.0) break;
      ++polish;
    }
    if (it >= options.max_iterations) {
      if (res <= tol) break;
      throw SolverError(SolverErrorKind::MaxIterations,
                        fmt::format("follower Newton did not reach {:.3e} in {} iterations", tol, it), res);
    }
    const Matrix J = kkt_jacobian(assemble_jacobians(model, x, w, eps));
    const Vector step = solve_dense(J, Vector(-H), "follower Newton system");

    const double merit = 0.5 * H.squaredNorm();
    double t = 1.0;
    FollowerState trial;
    Vector trial_H;
    double trial_merit = 0.0;
    for (;;) {
      trial = FollowerState::from_stacked(w.stacked() + t * step, m, l);
      trial_H = assemble_H(model, x, trial, eps);
      trial_merit = 0.5 * trial_H.squaredNorm();
      // Directional derivative of the merit along a Newton step is -||H||^2.
      if (std::isfinite(trial_merit) && trial_merit <= (1.0 - 2.0 * options.armijo_sigma * t) * merit) break;
      t *= options.armijo_beta;
      if (t < options.min_step) break;
    }
    if (t < options.min_step) {
      if (res <= tol) break;
      throw SolverError(SolverErrorKind::LineSearchFailure, "follower Armijo search found no decrease", res);
    }
    const double trial_res = trial_H.lpNorm<Eigen::Infinity>();
    if (res <= tol && trial_res >= res) break;  // polishing no longer helps

    w = std::move(trial);
    H = std::move(trial_H);
    res = trial_res;
    sol.residual_history.push_back(res);
    ++sol.iterations;

    const std::size_t k = sol.residual_history.size();
    if (k > 5 && res > 10.0 * sol.residual_history[k - 6]) {
      throw SolverError(SolverErrorKind::DivergenceDetected, "follower residual grew tenfold over five steps", res);
    }
  }

  sol.state = std::move(w);
  sol.residual = res;
  sol.comp_error = complementarity_error(sol.state, eps);
  return sol;
}

ResponseJacobian response_jacobian(const GameModel& model, const Vector& x, const FollowerState& w, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("response_jacobian: eps must be positive");
  const KktJacobianBlocks blocks = assemble_jacobians(model, x, w, eps);
  // H(x, w(x)) = 0  =>  grad w = -[Lp, Ap, 0] * system^{-1}
  const Matrix system = blocks.system_matrix();
  const Matrix rhs = blocks.parameter_matrix().transpose();
  const Matrix solved = solve_dense(Matrix(system.transpose()), rhs, "response Jacobian");
  return ResponseJacobian{-solved.transpose(), model.dims().m()};
}

double default_degeneracy_tol(const FollowerState& w) {
  const double scale = std::max(w.z.lpNorm<Eigen::Infinity>(), w.lambda.lpNorm<Eigen::Infinity>());
  return 1e-6 * std::max(1.0, scale);
}

DegeneracyReport classify_degeneracy(const FollowerState& w, double tol) {
  require_size(w.lambda, w.z.size(), "lambda");
  DegeneracyReport report;
  report.tol = tol;
  for (int i = 0; i < static_cast<int>(w.z.size()); ++i) {
    const bool z_zero = w.z(i) <= tol;
    const bool lambda_zero = w.lambda(i) <= tol;
    if (z_zero && lambda_zero) {
      report.zero_zero.push_back(i);
    } else if (z_zero) {
      report.zero_plus.push_back(i);
    } else if (lambda_zero) {
      report.plus_zero.push_back(i);
    } else {
      report.interior.push_back(i);
    }
  }
  return report;
}

double complementarity_error(const FollowerState& w, double eps) {
  require_size(w.lambda, w.z.size(), "lambda");
  if (w.z.size() == 0) return 0.0;
  return (w.z.cwiseProduct(w.lambda).array() - eps * eps).abs().maxCoeff();
}

}  // namespace mlmfg
