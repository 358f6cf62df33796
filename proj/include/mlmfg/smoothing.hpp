#pragma once

#include "mlmfg/linalg.hpp"

namespace mlmfg {

/// Fischer-Burmeister function sqrt(a^2 + b^2) - (a + b). Zero exactly when
/// a >= 0, b >= 0 and ab = 0.
double fb(double a, double b);

/// Smoothed Fischer-Burmeister function sqrt(a^2 + b^2 + 2 eps^2) - (a + b).
/// Its zeros with a, b > 0 satisfy ab = eps^2; eps = 0 gives fb().
double fb_smoothed(double a, double b, double eps);

struct FbGradient {
  double da;
  double db;
};

/// Partial derivatives of fb_smoothed. At the kink (a, b, eps) = (0, 0, 0)
/// returns the generalized-gradient element (1/sqrt(2) - 1, 1/sqrt(2) - 1).
/// Always (da + 1)^2 + (db + 1)^2 <= 1.
FbGradient fb_gradient(double a, double b, double eps);

/// || min(v, F) ||_inf with the componentwise minimum.
double natural_residual(const Vector& v, const Vector& F);

}  // namespace mlmfg
