#pragma once

#include "mlmfg/linalg.hpp"
#include "mlmfg/model.hpp"

namespace mlmfg {

/// {u | C u <= r}.
struct Polyhedron {
  Matrix C;
  Vector r;
};

/// {x | A x <= b, x >= 0} written as a single inequality system.
Polyhedron with_nonnegativity(const LeaderConstraints& constraints);

/// Euclidean projection onto a small polyhedron by enumerating every
/// linearly independent active set of at most dim(u) rows and keeping the
/// closest feasible candidate. Exact up to rounding; cost is combinatorial
/// in the number of rows, so this is meant for desk-scale sets only.
/// Throws std::domain_error when no feasible candidate exists.
Vector project_onto(const Polyhedron& set, const Vector& point, double feas_tol = 1e-10);

/// ||x - Proj_X(x - F)||_inf, the natural residual of the VI over X.
double projection_residual(const Polyhedron& set, const Vector& x, const Vector& F);

}  // namespace mlmfg
