#include "mlmfg/polyhedron.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace mlmfg {

namespace {

struct Search {
  const Polyhedron& set;
  const Vector& point;
  double tol;
  Vector best;
  double best_dist = std::numeric_limits<double>::infinity();
  std::vector<int> active;

  void consider() {
    Vector u = point;
    if (!active.empty()) {
      const auto k = static_cast<Eigen::Index>(active.size());
      Matrix Cs(k, set.C.cols());
      Vector rs(k);
      for (Eigen::Index i = 0; i < k; ++i) {
        Cs.row(i) = set.C.row(active[i]);
        rs(i) = set.r(active[i]);
      }
      const Eigen::FullPivLU<Matrix> lu(Cs * Cs.transpose());
      if (lu.rank() < k) return;
      u = point - Cs.transpose() * lu.solve(Cs * point - rs);
    }
    const double violation = (set.C * u - set.r).maxCoeff();
    if (violation > tol) return;
    const double dist = (u - point).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = std::move(u);
    }
  }

  void enumerate(int start) {
    consider();
    if (static_cast<Eigen::Index>(active.size()) >= set.C.cols()) return;
    for (int i = start; i < set.C.rows(); ++i) {
      active.push_back(i);
      enumerate(i + 1);
      active.pop_back();
    }
  }
};

}  // namespace

Polyhedron with_nonnegativity(const LeaderConstraints& constraints) {
  const Eigen::Index n = constraints.A.cols();
  const Eigen::Index p = constraints.A.rows();
  Polyhedron out{Matrix(p + n, n), Vector(p + n)};
  out.C << constraints.A, -Matrix::Identity(n, n);
  out.r << constraints.b, Vector::Zero(n);
  return out;
}

Vector project_onto(const Polyhedron& set, const Vector& point, double feas_tol) {
  require_size(point, set.C.cols(), "projection point");
  require_size(set.r, set.C.rows(), "polyhedron rhs");
  const double scale = std::max({1.0, point.lpNorm<Eigen::Infinity>(),
                                 set.r.size() ? set.r.lpNorm<Eigen::Infinity>() : 0.0});
  Search search{set, point, feas_tol * scale, Vector(), std::numeric_limits<double>::infinity(), {}};
  search.enumerate(0);
  if (!std::isfinite(search.best_dist)) throw std::domain_error("project_onto: polyhedron appears empty");
  return search.best;
}

double projection_residual(const Polyhedron& set, const Vector& x, const Vector& F) {
  require_size(F, x.size(), "projection_residual: F");
  return (x - project_onto(set, x - F)).lpNorm<Eigen::Infinity>();
}

}  // namespace mlmfg
