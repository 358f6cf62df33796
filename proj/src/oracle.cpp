#include "mlmfg/oracle.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

#include <fmt/format.h>

#include "mlmfg/errors.hpp"
#include "mlmfg/follower_solver.hpp"
#include "mlmfg/polyhedron.hpp"
#include "mlmfg/smoothing.hpp"

namespace mlmfg::oracle {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct FollowerBlockView {
  int y_offset;
  int y_size;
  int g_offset;
  int g_size;
};

FollowerBlockView block_view(const Dimensions& d, int omega) {
  return {d.follower_offset(omega), d.follower_dims[omega], d.constraint_offset(omega),
          d.follower_constraints[omega]};
}

// Constraint set of one follower at fixed (x, y^{-omega}), using that g is
// affine in y^omega.
Polyhedron block_constraint_set(const GameModel& model, const Vector& x, const Vector& y, const FollowerBlockView& b) {
  const Matrix C = model.constraint_jac_y(x, y).block(b.y_offset, b.g_offset, b.y_size, b.g_size).transpose();
  const Vector g = model.constraints(x, y).segment(b.g_offset, b.g_size);
  return Polyhedron{C, C * y.segment(b.y_offset, b.y_size) - g};
}

Vector block_field(const GameModel& model, const Vector& x, Vector y, const FollowerBlockView& b, const Vector& u) {
  y.segment(b.y_offset, b.y_size) = u;
  return model.follower_field(x, y).segment(b.y_offset, b.y_size);
}

// Projected gradient on the block VI; returns the new block strategy.
Vector solve_block_projected(const GameModel& model, const Vector& x, const Vector& y, const FollowerBlockView& b,
                             const OracleConfig& cfg) {
  const Polyhedron set = block_constraint_set(model, x, y, b);
  Vector u = project_onto(set, y.segment(b.y_offset, b.y_size));
  auto field = [&](const Vector& v) { return block_field(model, x, y, b, v); };

  double step = cfg.pg_step;
  if (step <= 0.0) {
    const double lipschitz = finite_diff_jacobian(field, u, cfg.fd_step).norm();
    step = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;
  }
  const double inner_tol = 1e-3 * cfg.fp_tol;
  double prev_move = std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg.pg_max_iters; ++it) {
    const Vector next = project_onto(set, u - step * field(u));
    const double move = (next - u).lpNorm<Eigen::Infinity>();
    if (move > prev_move && step > 1e-12) {
      step *= 0.5;
      continue;
    }
    u = next;
    prev_move = move;
    if (move <= inner_tol) return u;
  }
  throw SolverError(SolverErrorKind::NoConvergence, "block projected gradient did not converge", prev_move);
}

// Damped Newton on one follower's smoothed KKT subsystem
//   [G^omega + grad_{y^omega} g^omega lambda; g^omega + z; phi_eps(lambda, z)] = 0.
void solve_block_smoothed(const GameModel& model, const Vector& x, Vector& y, Vector& z, Vector& lambda,
                          const FollowerBlockView& b, double eps) {
  const int ms = b.y_size;
  const int ls = b.g_size;
  auto residual = [&](const Vector& u) {
    Vector yy = y;
    yy.segment(b.y_offset, ms) = u.head(ms);
    const Vector lam = u.tail(ls);
    const Vector zz = u.segment(ms, ls);
    const Matrix Cy = model.constraint_jac_y(x, yy).block(b.y_offset, b.g_offset, ms, ls);
    Vector r(ms + 2 * ls);
    r.head(ms) = model.follower_field(x, yy).segment(b.y_offset, ms) + Cy * lam;
    r.segment(ms, ls) = model.constraints(x, yy).segment(b.g_offset, ls) + zz;
    for (int i = 0; i < ls; ++i) r(ms + ls + i) = fb_smoothed(lam(i), zz(i), eps);
    return r;
  };
  auto jacobian = [&](const Vector& u) {
    Vector yy = y;
    yy.segment(b.y_offset, ms) = u.head(ms);
    Matrix J = Matrix::Zero(ms + 2 * ls, ms + 2 * ls);
    const Matrix Gy = model.follower_field_jac_y(x, yy).block(b.y_offset, b.y_offset, ms, ms).transpose();
    const Matrix Cy = model.constraint_jac_y(x, yy).block(b.y_offset, b.g_offset, ms, ls);
    Vector lam_full = Vector::Zero(model.dims().l());
    lam_full.segment(b.g_offset, ls) = u.tail(ls);
    const Matrix Hyy = model.constraint_hess_yy(x, yy, lam_full).block(b.y_offset, b.y_offset, ms, ms);
    J.topLeftCorner(ms, ms) = Gy + Hyy;
    J.topRightCorner(ms, ls) = Cy;
    J.block(ms, 0, ls, ms) = Cy.transpose();
    J.block(ms, ms, ls, ls).setIdentity();
    for (int i = 0; i < ls; ++i) {
      const FbGradient g = fb_gradient(u(ms + ls + i), u(ms + i), eps);
      J(ms + ls + i, ms + ls + i) = g.da;
      J(ms + ls + i, ms + i) = g.db;
    }
    return J;
  };

  Vector u(ms + 2 * ls);
  u << y.segment(b.y_offset, ms), z, lambda;
  Vector r = residual(u);
  double norm = r.norm();
  for (int it = 0; it < 200 && norm > 1e-14; ++it) {
    const Vector d = solve_dense(jacobian(u), Vector(-r), "oracle block Newton");
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      const Vector trial = u + t * d;
      const Vector tr = residual(trial);
      if (tr.norm() < norm) {
        u = trial;
        r = tr;
        norm = tr.norm();
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  y.segment(b.y_offset, ms) = u.head(ms);
  z = u.segment(ms, ls);
  lambda = u.tail(ls);
}

Polyhedron leader_block_set(const GameModel& model, int nu) {
  return with_nonnegativity(model.leader_block_constraints(nu));
}

}  // namespace

void OracleConfig::check() const {
  if (!(fd_step >= 1e-8 && fd_step <= 1e-3)) {
    throw std::invalid_argument(fmt::format("oracle: fd_step must lie in [1e-8, 1e-3], got {}", fd_step));
  }
  if (!(fp_tol > 0.0) || fp_max_sweeps <= 0 || !(pg_step >= 0.0) || !(pg_tol > 0.0) || pg_max_iters <= 0) {
    throw std::invalid_argument("oracle: tolerances and iteration limits must be positive");
  }
}

Matrix finite_diff_jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x, double fd_step) {
  Matrix J;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = fd_step * std::max(1.0, std::abs(x(j)));
    Vector xp = x;
    Vector xm = x;
    xp(j) += h;
    xm(j) -= h;
    Vector fp;
    Vector fm;
    try {
      fp = f(xp);
      fm = f(xm);
    } catch (const std::exception& e) {
      throw std::runtime_error(fmt::format("finite_diff_jacobian: evaluation failed at coordinate {}: {}", j, e.what()));
    }
    if (j == 0) J.resize(x.size(), fp.size());
    J.row(j) = ((fp - fm) / (xp(j) - xm(j))).transpose();
  }
  return J;
}

Vector best_response_fixed_point(const GameModel& model, const Vector& x, double eps, const OracleConfig& cfg,
                                 SweepOrder order) {
  cfg.check();
  if (eps < 0.0) throw std::invalid_argument("best_response_fixed_point: eps must be nonnegative");
  const Dimensions& d = model.dims();
  require_size(x, d.n(), "x");
  const int M = d.n_followers();

  Vector y = Vector::Zero(d.m());
  std::vector<Vector> z(M);
  std::vector<Vector> lambda(M);
  for (int w = 0; w < M; ++w) {
    z[w] = Vector::Constant(d.follower_constraints[w], std::max(eps, 1e-8));
    lambda[w] = z[w];
  }

  double change = kNan;
  for (int sweep = 0; sweep < cfg.fp_max_sweeps; ++sweep) {
    const Vector before = y;
    for (int k = 0; k < M; ++k) {
      const int w = order == SweepOrder::Forward ? k : M - 1 - k;
      const FollowerBlockView b = block_view(d, w);
      if (eps == 0.0) {
        y.segment(b.y_offset, b.y_size) = solve_block_projected(model, x, y, b, cfg);
      } else {
        solve_block_smoothed(model, x, y, z[w], lambda[w], b, eps);
      }
    }
    change = (y - before).lpNorm<Eigen::Infinity>();
    if (change <= cfg.fp_tol) return y;
  }
  throw SolverError(SolverErrorKind::NoConvergence,
                    fmt::format("best-response sweeps did not settle in {} sweeps", cfg.fp_max_sweeps), change);
}

Vector leader_oracle_equilibrium(const GameModel& model, double eps, const Vector& x0, const OracleConfig& cfg) {
  cfg.check();
  if (!(eps > 0.0)) throw std::invalid_argument("leader_oracle_equilibrium: eps must be positive");
  const Dimensions& d = model.dims();
  require_size(x0, d.n(), "x0");
  const int N = d.n_leaders();

  std::optional<FollowerState> warm;
  auto reduced_objective = [&](int nu, const Vector& x) {
    const FollowerSolution s = solve_followers(model, x, eps, warm);
    warm = s.state;
    return model.leader_objective(nu, x, s.state.y);
  };
  // Gradient of Theta^nu in x^nu by central differences.
  auto gradient = [&](int nu, const Vector& x) {
    const int off = d.leader_offset(nu);
    const int nn = d.leader_dims[nu];
    Vector g(nn);
    for (int j = 0; j < nn; ++j) {
      const double h = cfg.fd_step * std::max(1.0, std::abs(x(off + j)));
      Vector xp = x;
      Vector xm = x;
      xp(off + j) += h;
      xm(off + j) -= h;
      g(j) = (reduced_objective(nu, xp) - reduced_objective(nu, xm)) / (xp(off + j) - xm(off + j));
    }
    return g;
  };
  // Frobenius norm of a finite-difference Hessian of Theta^nu.
  auto lipschitz = [&](int nu, const Vector& x) {
    const int off = d.leader_offset(nu);
    const int nn = d.leader_dims[nu];
    const double h = std::sqrt(cfg.fd_step);
    Matrix Hs(nn, nn);
    for (int j = 0; j < nn; ++j) {
      Vector xp = x;
      Vector xm = x;
      xp(off + j) += h;
      xm(off + j) -= h;
      Hs.col(j) = (gradient(nu, xp) - gradient(nu, xm)) / (2.0 * h);
    }
    return Hs.norm();
  };

  std::vector<Polyhedron> sets;
  Vector x = x0;
  for (int nu = 0; nu < N; ++nu) {
    sets.push_back(leader_block_set(model, nu));
    const int off = d.leader_offset(nu);
    x.segment(off, d.leader_dims[nu]) = project_onto(sets[nu], x.segment(off, d.leader_dims[nu]));
  }

  std::vector<double> changes;
  std::vector<double> steps(N, cfg.pg_step);
  for (int cycle = 0; cycle < cfg.pg_max_iters; ++cycle) {
    const Vector before = x;
    for (int nu = 0; nu < N; ++nu) {
      const int off = d.leader_offset(nu);
      const int nn = d.leader_dims[nu];
      if (cfg.pg_step <= 0.0 && cycle % 25 == 0) {
        const double L = lipschitz(nu, x);
        steps[nu] = L > 0.0 ? 1.0 / L : 1.0;
      }
      for (int inner = 0; inner < 50; ++inner) {
        const Vector g = gradient(nu, x);
        const double f0 = reduced_objective(nu, x);
        Vector candidate = x;
        double move = 0.0;
        for (int halving = 0; halving < 40; ++halving) {
          candidate.segment(off, nn) = project_onto(sets[nu], x.segment(off, nn) - steps[nu] * g);
          move = (candidate - x).lpNorm<Eigen::Infinity>();
          if (move == 0.0 || reduced_objective(nu, candidate) <= f0 + 1e-14 * std::max(1.0, std::abs(f0))) break;
          steps[nu] *= 0.5;
        }
        x = candidate;
        if (move <= 0.1 * cfg.pg_tol) break;
      }
    }
    const double change = (x - before).lpNorm<Eigen::Infinity>();
    changes.push_back(change);
    if (change <= cfg.pg_tol) {
      for (int nu = 0; nu < N; ++nu) {
        const int off = d.leader_offset(nu);
        const int nn = d.leader_dims[nu];
        const double res = projection_residual(sets[nu], x.segment(off, nn), gradient(nu, x));
        if (res > 10.0 * cfg.pg_tol) {
          throw SolverError(SolverErrorKind::NoConvergence,
                            fmt::format("leader {} projected-gradient residual {:.3e} above {:.3e}", nu, res,
                                        10.0 * cfg.pg_tol),
                            res);
        }
      }
      return x;
    }
    if (changes.size() > 50 && change >= 0.5 * changes[changes.size() - 51]) {
      throw SolverError(SolverErrorKind::CyclingDetected,
                        fmt::format("joint change {:.3e} has not halved over 50 cycles", change), change);
    }
  }
  throw SolverError(SolverErrorKind::NoConvergence,
                    fmt::format("leader oracle did not settle in {} cycles", cfg.pg_max_iters), changes.back());
}

}  // namespace mlmfg::oracle
