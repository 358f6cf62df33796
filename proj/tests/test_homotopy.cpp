#include <doctest.h>

#include <cmath>

#include "mlmfg/errors.hpp"
#include "mlmfg/homotopy.hpp"
#include "toy_models.hpp"

using namespace mlmfg;
using doctest::Approx;

namespace {

// Scalar toy whose follower evaluations fail once y drops into (0, floor).
// y = 0 itself stays allowed because cold starts probe it.
class FloorToyModel : public toy::ScalarToyModel {
 public:
  explicit FloorToyModel(double floor) : floor_(floor) {}
  Vector follower_field(const Vector& x, const Vector& y) const override {
    if (y(0) > 0.0 && y(0) < floor_) throw SolverError(SolverErrorKind::LinearSolveFailure, "below floor", y(0));
    return toy::ScalarToyModel::follower_field(x, y);
  }

 private:
  double floor_;
};

const HomotopyTrajectory& builtin_run() {
  static const HomotopyTrajectory traj = [] {
    const auto model = build_quadratic_model(hori_fukushima_extended());
    return run_homotopy(*model, Schedule{}, Vector::Constant(4, 3.0));
  }();
  return traj;
}

}  // namespace

TEST_CASE("schedule") {
  const Schedule s;
  CHECK(s.eps0 == 1.0);
  CHECK(s.ratio == 0.9);
  CHECK(s.steps == 75);
  CHECK(s.eps(74) == Approx(std::pow(0.9, 74)).epsilon(1e-14));
  CHECK(s.eps(74) == Approx(4.0562e-4).epsilon(1e-4));
  CHECK_THROWS_AS((Schedule{0.0, 0.9, 5}.check()), std::invalid_argument);
  CHECK_THROWS_AS((Schedule{1.0, 1.0, 5}.check()), std::invalid_argument);
  CHECK_THROWS_AS((Schedule{1.0, 0.5, 0}.check()), std::invalid_argument);
  CHECK_NOTHROW((Schedule{2.0, 0.5, 1}.check()));
}

TEST_CASE("builtin trajectory") {
  const HomotopyTrajectory& traj = builtin_run();
  REQUIRE(traj.records.size() == 75);
  for (std::size_t k = 0; k < traj.records.size(); ++k) {
    const HomotopyRecord& r = traj.records[k];
    CHECK(r.k == static_cast<int>(k));
    if (k > 0) CHECK(r.eps < traj.records[k - 1].eps);
    CHECK(r.ncp_residual < 8e-6);
    CHECK(r.follower_comp_error <= 1e-8 * std::max(1.0, r.eps * r.eps));
    CHECK(r.x.size() == 4);
    CHECK(r.mu.size() == 4);
    CHECK(r.y.size() == 4);
    CHECK(r.z.size() == 6);
    CHECK(r.lambda.size() == 6);
  }
  const StationarityReport rep = stationarity_report(*build_quadratic_model(hori_fukushima_extended()), traj);
  REQUIRE(rep.cauchy_tail);
  CHECK(*rep.cauchy_tail <= 1e-4);
  CHECK(rep.projection_residual <= 1e-4);
  CHECK(rep.comp_product_error <= 1e-8 * std::max(1.0, rep.eps_final * rep.eps_final));
  CHECK(rep.eps_final == traj.records.back().eps);
  CHECK(rep.strict_complementarity);
  CHECK(rep.label.find("approximate B-stationary") == 0);
  CHECK(rep.degeneracy.zero_zero.empty());
}

TEST_CASE("decoupled leaders do not move with eps") {
  const ProblemInstance inst = toy::decoupled_instance();
  const auto model = build_quadratic_model(inst);
  const HomotopyTrajectory traj = run_homotopy(*model, Schedule{1.0, 0.5, 12}, Vector::Constant(4, 3.0));
  for (const HomotopyRecord& r : traj.records) {
    CHECK((r.x - traj.records.front().x).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
  const StationarityReport rep = stationarity_report(*model, traj);
  CHECK(rep.projection_residual <= 1e-10);
}

TEST_CASE("single step schedule") {
  const auto model = build_quadratic_model(hori_fukushima_extended());
  const Vector x0 = Vector::Constant(4, 3.0);
  const HomotopyTrajectory traj = run_homotopy(*model, Schedule{0.7, 0.9, 1}, x0);
  REQUIRE(traj.records.size() == 1);
  const LeaderSolution s = solve_leader_ncp(*model, 0.7, LeaderState{x0, Vector::Zero(4)});
  CHECK(traj.records[0].x == s.state.x);
  CHECK(traj.records[0].mu == s.state.mu);
  CHECK(traj.records[0].eps == 0.7);
  const StationarityReport rep = stationarity_report(*model, traj);
  CHECK_FALSE(rep.cauchy_tail.has_value());
}

TEST_CASE("failure carries the partial trajectory") {
  const FloorToyModel model(0.15);
  const Schedule schedule{1.0, 0.5, 6};
  for (bool retry : {false, true}) {
    HomotopyOptions opts;
    opts.retry_halve = retry;
    try {
      run_homotopy(model, schedule, Vector::Constant(1, 1.0), opts);
      FAIL("expected HomotopyFailure");
    } catch (const HomotopyFailure& e) {
      CHECK(e.step() == 3);
      CHECK(e.partial().records.size() == 3);
      CHECK(e.kind() == SolverErrorKind::LinearSolveFailure);
      CHECK(std::string(e.what()).find("step 3") != std::string::npos);
    }
  }
  // the toy equilibrium is x = 0, y = eps
  const HomotopyTrajectory ok = run_homotopy(toy::ScalarToyModel(), schedule, Vector::Constant(1, 1.0));
  for (const HomotopyRecord& r : ok.records) {
    CHECK(r.x(0) == Approx(0.0));
    CHECK(r.y(0) == Approx(r.eps).epsilon(1e-9));
  }
}

TEST_CASE("retry leaves successful runs unchanged") {
  const auto model = build_quadratic_model(hori_fukushima_extended());
  HomotopyOptions opts;
  opts.retry_halve = true;
  const HomotopyTrajectory a = run_homotopy(*model, Schedule{1.0, 0.5, 4}, Vector::Constant(4, 3.0), opts);
  const HomotopyTrajectory b = run_homotopy(*model, Schedule{1.0, 0.5, 4}, Vector::Constant(4, 3.0));
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t k = 0; k < a.records.size(); ++k) CHECK(a.records[k].x == b.records[k].x);
}

TEST_CASE("homotopy input checks") {
  const auto model = build_quadratic_model(hori_fukushima_extended());
  CHECK_THROWS_AS(run_homotopy(*model, Schedule{}, Vector::Zero(3)), DimensionError);
  Vector bad = Vector::Zero(4);
  bad(1) = std::nan("");
  CHECK_THROWS_AS(run_homotopy(*model, Schedule{}, bad), std::invalid_argument);
  CHECK_THROWS_AS(stationarity_report(*model, HomotopyTrajectory{}), std::invalid_argument);
}
