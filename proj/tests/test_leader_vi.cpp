#include <doctest.h>

#include <cmath>
#include <random>

#include "mlmfg/errors.hpp"
#include "mlmfg/leader_vi.hpp"
#include "mlmfg/oracle.hpp"
#include "mlmfg/polyhedron.hpp"
#include "mlmfg/smoothing.hpp"
#include "toy_models.hpp"

using namespace mlmfg;
using doctest::Approx;

namespace {

Vector decoupled_equilibrium(const ProblemInstance& inst) {
  Vector x(inst.dims.n());
  int off = 0;
  for (const LeaderBlock& l : inst.leaders) {
    x.segment(off, l.q.size()) = -l.H.ldlt().solve(l.q);
    off += static_cast<int>(l.q.size());
  }
  return x;
}

}  // namespace

TEST_CASE("projection onto small polyhedra") {
  LeaderConstraints lc{toy::mat({{1, 1}}), toy::vec({1})};
  const Polyhedron set = with_nonnegativity(lc);
  CHECK(set.C.rows() == 3);
  CHECK((project_onto(set, toy::vec({0.2, 0.3})) - toy::vec({0.2, 0.3})).norm() <= 1e-15);
  CHECK((project_onto(set, toy::vec({2, 2})) - toy::vec({0.5, 0.5})).norm() <= 1e-14);
  CHECK((project_onto(set, toy::vec({-1, 3})) - toy::vec({0, 1})).norm() <= 1e-14);
  CHECK((project_onto(set, toy::vec({-1, -1})) - toy::vec({0, 0})).norm() <= 1e-15);

  // against the independent QP enumerator: min 1/2|u - p|^2
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-3, 3);
  const auto model = build_quadratic_model(hori_fukushima_extended());
  const Polyhedron X = with_nonnegativity(model->leader_constraints());
  for (int t = 0; t < 50; ++t) {
    Vector p(4);
    for (int i = 0; i < 4; ++i) p(i) = u(rng);
    const auto ref = toy::solve_qp_by_enumeration(Matrix::Identity(4, 4), -p, X.C, X.r);
    REQUIRE(ref);
    CHECK((project_onto(X, p) - *ref).norm() <= 1e-12);
  }

  const Polyhedron empty{toy::mat({{1}, {-1}}), toy::vec({-1, -1})};
  CHECK_THROWS_AS(project_onto(empty, toy::vec({0})), std::domain_error);
}

TEST_CASE("leader field without follower influence") {
  const ProblemInstance inst = toy::decoupled_instance();
  const auto model = build_quadratic_model(inst);
  const Vector x = toy::vec({0.3, 1.2, 0.7, 0.1});
  const Vector F = leader_field(*model, x, 0.1).field;
  Vector expected(4);
  expected << inst.leaders[0].H * x.head(2) + inst.leaders[0].q, inst.leaders[1].H * x.tail(2) + inst.leaders[1].q;
  CHECK((F - expected).norm() <= 1e-14);
}

TEST_CASE("leader field of the scalar toy") {
  const toy::ScalarToyModel model;
  for (double x : {0.0, 0.5, 2.0}) {
    for (double eps : {1.0, 0.1}) {
      const Vector F = leader_field(model, Vector::Constant(1, x), eps).field;
      CHECK(F(0) == Approx(1.0 + toy::scalar_toy_dy(x, eps)).epsilon(1e-10));
    }
  }
}

TEST_CASE("leader field matches differences of the reduced objectives") {
  const auto model = build_quadratic_model(hori_fukushima_extended());
  const Vector x = Vector::Constant(4, 3.0);
  const double eps = 1.0;
  const Vector F = leader_field(*model, x, eps).field;
  for (int nu = 0; nu < 2; ++nu) {
    const int off = model->dims().leader_offset(nu);
    auto theta = [&](const Vector& xn) {
      Vector xx = x;
      xx.segment(off, 2) = xn;
      return Vector::Constant(1, model->leader_objective(nu, xx, solve_followers(*model, xx, eps).state.y));
    };
    const Vector g = oracle::finite_diff_jacobian(theta, x.segment(off, 2), 1e-5).col(0);
    CHECK((g - F.segment(off, 2)).norm() <= 1e-6 * F.segment(off, 2).norm());
  }
}

TEST_CASE("ncp residual vanishes at the interior decoupled equilibrium") {
  const ProblemInstance inst = toy::decoupled_instance();
  const auto model = build_quadratic_model(inst);
  const Vector xs = decoupled_equilibrium(inst);
  REQUIRE((xs.array() > 0).all());
  const LeaderState v{xs, Vector::Zero(4)};
  const Vector psi = ncp_residual(*model, v, 0.5);
  CHECK(psi.head(4).lpNorm<Eigen::Infinity>() <= 1e-13);
  // mu = 0 against slack rows: fb(0, s) = 0 for s > 0
  CHECK(psi.tail(4).lpNorm<Eigen::Infinity>() <= 1e-13);
  const Vector F_hat = ncp_map(*model, v, 0.5);
  CHECK((F_hat.tail(4) - (Vector::Constant(4, 10.0) - model->leader_constraints().A * xs)).norm() <= 1e-15);
}

TEST_CASE("ncp jacobian") {
  const auto model = build_quadratic_model(hori_fukushima_extended());
  const int n = 4;
  const int p = 4;

  SUBCASE("matches finite differences of Psi away from kinks") {
    const LeaderState v{toy::vec({0.7, 0.4, 0.2, 0.9}), toy::vec({0.3, 0.5, 0.2, 0.6})};
    const double eps = 0.5;
    const Matrix J = ncp_jacobian(*model, v, eps);
    const Matrix fd = oracle::finite_diff_jacobian(
                          [&](const Vector& s) { return ncp_residual(*model, LeaderState::from_stacked(s, n, p), eps); },
                          v.stacked(), 1e-5)
                          .transpose();
    CHECK((J - fd).norm() <= 1e-4 * J.norm());
  }
  SUBCASE("slack rows are exact") {
    const LeaderState v{toy::vec({0.7, 0.4, 0.2, 0.9}), toy::vec({0.3, 0.5, 0.2, 0.6})};
    const Vector F_hat = ncp_map(*model, v, 0.5);
    const Matrix J = ncp_jacobian(*model, v, 0.5);
    const Matrix& A = model->leader_constraints().A;
    for (int j = 0; j < p; ++j) {
      const FbGradient g = fb_gradient(v.mu(j), F_hat(n + j), 0.0);
      Vector row = Vector::Zero(n + p);
      row.head(n) = -g.db * A.row(j).transpose();
      row(n + j) += g.da;
      CHECK((J.row(n + j).transpose() - row).norm() <= 1e-14);
    }
  }
  SUBCASE("kink rows use the designated element") {
    const LeaderState v{toy::vec({0.2, 0.4, 0.5, 0.0}), toy::vec({0, 0, 0, 0})};
    Vector F_hat = ncp_map(*model, v, 0.5);
    const Matrix J = ncp_jacobian(*model, v, 0.5);
    // mu_4 = 0 and (b - A x)_4 = 1 - 2*0.5 - 0 = 0: kink
    REQUIRE(std::abs(F_hat(n + 3)) <= 1e-15);
    const double c = 1.0 / std::sqrt(2.0) - 1.0;
    Vector row = Vector::Zero(n + p);
    row.head(n) = -c * model->leader_constraints().A.row(3).transpose();
    row(n + 3) += c;
    CHECK((J.row(n + 3).transpose() - row).norm() <= 1e-14);
  }
}

TEST_CASE("decoupled leaders converge fast") {
  const ProblemInstance inst = toy::decoupled_instance();
  const auto model = build_quadratic_model(inst);
  const Vector xs = decoupled_equilibrium(inst);
  const LeaderSolution s = solve_leader_ncp(*model, 0.3, LeaderState{Vector::Zero(4), Vector::Zero(4)});
  CHECK(s.iterations <= 5);
  CHECK((s.state.x - xs).lpNorm<Eigen::Infinity>() <= 1e-8);
  CHECK(s.state.mu.lpNorm<Eigen::Infinity>() <= 1e-8);
  // from farther away the damped first steps cost a few more iterations
  const LeaderSolution far = solve_leader_ncp(*model, 0.3, LeaderState{Vector::Constant(4, 3.0), Vector::Zero(4)});
  CHECK(far.iterations <= 10);
  CHECK((far.state.x - xs).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("builtin instance at eps = 1") {
  const auto model = build_quadratic_model(hori_fukushima_extended());
  const LeaderSolution s = solve_leader_ncp(*model, 1.0, LeaderState{Vector::Constant(4, 3.0), Vector::Zero(4)});
  CHECK(s.natural_residual < 8e-6);
  CHECK(natural_residual(s.state.stacked(), ncp_map(*model, s.state, 1.0)) < 8e-6);
  CHECK(vi_residual(*model, s.state.x, leader_field(*model, s.state.x, 1.0).field) <= 1e-5);
  CHECK((s.state.x.array() >= -1e-10).all());
  const LeaderConstraints& lc = model->leader_constraints();
  CHECK(((lc.b - lc.A * s.state.x).array() >= -1e-6).all());
  CHECK(s.newton_solve_failures == 0);

  // coordinates certified by the projected-gradient oracle
  const Vector xo = oracle::leader_oracle_equilibrium(*model, 1.0, Vector::Constant(4, 1.0));
  CHECK((xo - s.state.x).lpNorm<Eigen::Infinity>() <= 1e-4);

  for (std::size_t k = 1; k < s.trace.size(); ++k) CHECK(s.trace[k].merit < s.trace[k - 1].merit);
}

TEST_CASE("infeasible start still converges") {
  const auto model = build_quadratic_model(hori_fukushima_extended());
  const LeaderState v0{Vector::Constant(4, 10.0), Vector::Zero(4)};
  REQUIRE(((model->leader_constraints().A * v0.x - model->leader_constraints().b).array() > 0).all());
  const LeaderSolution s = solve_leader_ncp(*model, 1.0, v0);
  CHECK(s.natural_residual < 8e-6);
  const LeaderSolution ref = solve_leader_ncp(*model, 1.0, LeaderState{Vector::Constant(4, 3.0), Vector::Zero(4)});
  CHECK((s.state.x - ref.state.x).lpNorm<Eigen::Infinity>() <= 1e-5);
}

TEST_CASE("leader solver input checks") {
  const auto model = build_quadratic_model(hori_fukushima_extended());
  CHECK_THROWS_AS(solve_leader_ncp(*model, 0.0, LeaderState{Vector::Zero(4), Vector::Zero(4)}), std::invalid_argument);
  CHECK_THROWS_AS(solve_leader_ncp(*model, 1.0, LeaderState{Vector::Zero(3), Vector::Zero(4)}), DimensionError);
  LeaderSolverOptions opts;
  opts.max_iterations = 1;
  try {
    solve_leader_ncp(*model, 1.0, LeaderState{Vector::Constant(4, 3.0), Vector::Zero(4)}, opts);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.kind() == SolverErrorKind::MaxIterations);
  }
}
