#include "mlmfg/smoothing.hpp"

#include <cmath>
#include <numbers>

#include "mlmfg/errors.hpp"

namespace mlmfg {

namespace {

// sqrt(a^2 + b^2 + 2 eps^2) without intermediate overflow.
double smoothed_norm(double a, double b, double eps) {
  return std::hypot(std::hypot(a, b), std::numbers::sqrt2 * eps);
}

}  // namespace

double fb(double a, double b) { return std::hypot(a, b) - (a + b); }

double fb_smoothed(double a, double b, double eps) { return smoothed_norm(a, b, eps) - (a + b); }

FbGradient fb_gradient(double a, double b, double eps) {
  const double r = smoothed_norm(a, b, eps);
  if (r == 0.0) {
    constexpr double kink = 1.0 / std::numbers::sqrt2 - 1.0;
    return {kink, kink};
  }
  return {a / r - 1.0, b / r - 1.0};
}

double natural_residual(const Vector& v, const Vector& F) {
  require_size(F, v.size(), "natural_residual: F");
  double out = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) out = std::max(out, std::abs(std::min(v(i), F(i))));
  return out;
}

}  // namespace mlmfg
