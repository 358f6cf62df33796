#include <doctest.h>

#include <cmath>
#include <random>

#include "mlmfg/errors.hpp"
#include "mlmfg/smoothing.hpp"

using namespace mlmfg;
using doctest::Approx;

TEST_CASE("fb examples") {
  CHECK(fb(0.0, 0.0) == 0.0);
  CHECK(fb(3.0, 4.0) == Approx(-2.0).epsilon(1e-15));
  CHECK(fb(0.0, 5.0) == 0.0);
}

TEST_CASE("fb_smoothed examples") {
  CHECK(fb_smoothed(0.0, 0.0, 1.0) == Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK(fb_smoothed(1.0, 1.0, 1.0) == Approx(0.0).epsilon(1e-15));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng);
    const double b = u(rng);
    CHECK(fb_smoothed(a, b, 0.0) == fb(a, b));
  }
}

TEST_CASE("fb_gradient examples") {
  FbGradient g = fb_gradient(3.0, 4.0, 0.0);
  CHECK(g.da == Approx(-0.4).epsilon(1e-15));
  CHECK(g.db == Approx(-0.2).epsilon(1e-15));
  g = fb_gradient(0.0, 0.0, 1.0);
  CHECK(g.da == -1.0);
  CHECK(g.db == -1.0);
  g = fb_gradient(0.0, 0.0, 0.0);
  CHECK(g.da == Approx(1.0 / std::sqrt(2.0) - 1.0).epsilon(1e-15));
  CHECK(g.db == Approx(1.0 / std::sqrt(2.0) - 1.0).epsilon(1e-15));
}

TEST_CASE("natural_residual examples") {
  CHECK(natural_residual(Vector{{1.0, 0.0, 2.0}}, Vector{{0.0, 3.0, -1.0}}) == 1.0);
  CHECK(natural_residual(Vector::Zero(3), Vector::Zero(3)) == 0.0);
  CHECK_THROWS_AS(natural_residual(Vector{{5.0}}, Vector{{2.0, 3.0}}), DimensionError);
}

TEST_CASE("fb zero set is the complementarity set") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 3000; ++i) {
    double a = u(rng);
    double b = u(rng);
    if (i % 3 == 1) a = 0.0;
    if (i % 3 == 2) b = 0.0;
    const bool comp = a >= 0.0 && b >= 0.0 && a * b <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
    CHECK((std::abs(fb(a, b)) <= 1e-12) == comp);
  }
}

TEST_CASE("smoothing properties") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::uniform_real_distribution<double> e(0.0, 2.0);
  for (int i = 0; i < 2000; ++i) {
    const double a = u(rng);
    const double b = u(rng);
    const double eps = e(rng);
    CAPTURE(a);
    CAPTURE(b);
    CAPTURE(eps);
    CHECK(std::abs(fb_smoothed(a, b, eps) - fb(a, b)) <= std::sqrt(2.0) * eps + 1e-14);
    CHECK(fb(a, b) == fb(b, a));
    CHECK(fb_smoothed(a, b, eps) == fb_smoothed(b, a, eps));
    const FbGradient g = fb_gradient(a, b, eps);
    CHECK(std::hypot(g.da + 1.0, g.db + 1.0) <= 1.0 + 1e-15);

    // central differences of fb_smoothed
    const double h = 1e-6;
    const double da = (fb_smoothed(a + h, b, eps) - fb_smoothed(a - h, b, eps)) / (2 * h);
    const double db = (fb_smoothed(a, b + h, eps) - fb_smoothed(a, b - h, eps)) / (2 * h);
    if (eps > 0.05) {
      CHECK(std::abs(g.da - da) <= 1e-7 * std::max(1.0, std::abs(g.da)));
      CHECK(std::abs(g.db - db) <= 1e-7 * std::max(1.0, std::abs(g.db)));
    }
  }
}

TEST_CASE("roots of the smoothed function satisfy ab = eps^2") {
  for (double eps : {1.0, 0.1, 1e-3}) {
    for (double a : {0.01, 0.5, 2.0, 40.0}) {
      const double b = eps * eps / a;
      CHECK(std::abs(fb_smoothed(a, b, eps)) <= 1e-13 * std::max(1.0, a));
    }
  }
}

TEST_CASE("large inputs do not overflow") {
  const double big = 1e200;
  CHECK(std::isfinite(fb_smoothed(big, big, 1.0)));
  CHECK(fb_smoothed(big, 0.0, 1.0) == Approx(0.0).epsilon(1e-12));
  const FbGradient g = fb_gradient(big, big, 1e190);
  CHECK(std::isfinite(g.da));
  CHECK(std::isfinite(g.db));
}
