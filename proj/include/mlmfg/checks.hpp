#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mlmfg/homotopy.hpp"
#include "mlmfg/model.hpp"

namespace mlmfg {

struct CheckResult {
  std::string suite;  // follower_solver, leader_vi or oracle
  std::string name;
  bool passed = false;
  std::string detail;
};

struct CheckConfig {
  std::uint64_t seed = 0;
  /// Random leader points are drawn uniformly from [0, box]^n.
  double box = 3.0;
  Schedule schedule;
  Vector x0;  // empty selects 3 in every coordinate
};

/// Runs the follower_solver, leader_vi and oracle property suites against a
/// model. Solver exceptions inside a check turn into a failed result.
std::vector<CheckResult> run_invariant_checks(const GameModel& model, const CheckConfig& config);

/// Relative Frobenius error ||J - J_fd|| / ||J|| between the implicit
/// response Jacobian grad y_eps(x) and central differences of the follower
/// solve (absolute error when J vanishes).
double response_jacobian_error(const GameModel& model, const Vector& x, double eps, double fd_step = 1e-5);

}  // namespace mlmfg
