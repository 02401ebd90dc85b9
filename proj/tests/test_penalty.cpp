#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "sparsefactor/penalty.hpp"

using namespace sparsefactor;

namespace {

// 1-D reference minimizer of (1/2)(theta - t)^2 + rho_star P(|theta|) by
// coarse scan plus local refinement.
double grid_threshold(const PenaltySpec& spec, double t, double rho_star) {
  auto f = [&](double x) {
    double d = x - t;
    return 0.5 * d * d + penalty_value(spec, x, rho_star);
  };
  const double lim = std::abs(t) + 1.0;
  double best_x = 0.0, best = f(0.0);
  for (double x = -lim; x <= lim; x += 1e-3) {
    double v = f(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  double lo = best_x - 2e-3, hi = best_x + 2e-3;
  for (double x = lo; x <= hi; x += 1e-7) {
    double v = f(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  return best_x;
}

}  // namespace

TEST_CASE("penalty values match hand calculations") {
  PenaltySpec lasso = PenaltySpec::lasso();
  CHECK(penalty_value(lasso, 2.0, 0.3) == doctest::Approx(0.6));
  CHECK(penalty_value(lasso, -2.0, 0.3) == doctest::Approx(0.6));

  PenaltySpec mcp = PenaltySpec::mcp(3.0);
  // below the knee: rho(|t| - t^2/(2 rho gamma))
  CHECK(penalty_value(mcp, 0.5, 1.0) ==
        doctest::Approx(1.0 * (0.5 - 0.25 / 6.0)));
  // saturation: rho^2 gamma / 2
  CHECK(penalty_value(mcp, 10.0, 1.0) == doctest::Approx(1.5));

  PenaltySpec scad = PenaltySpec::scad(3.7);
  CHECK(penalty_value(scad, 0.2, 0.5) == doctest::Approx(0.1));
  double rho = 0.5, g = 3.7, a = 1.0;
  CHECK(penalty_value(scad, a, rho) ==
        doctest::Approx((2 * g * rho * a - a * a - rho * rho) /
                        (2 * (g - 1))));
  CHECK(penalty_value(scad, 10.0, rho) ==
        doctest::Approx(rho * rho * (g + 1) / 2));
}

TEST_CASE("penalty is continuous across branch boundaries") {
  const double rho = 0.7;
  for (double g : {2.5, 3.7, 10.0}) {
    PenaltySpec scad = PenaltySpec::scad(g);
    for (double b : {rho, g * rho}) {
      CHECK(penalty_value(scad, b - 1e-9, rho) ==
            doctest::Approx(penalty_value(scad, b + 1e-9, rho)).epsilon(1e-6));
    }
  }
  for (double g : {1.5, 3.0, 20.0}) {
    PenaltySpec mcp = PenaltySpec::mcp(g);
    double b = rho * g;
    CHECK(penalty_value(mcp, b - 1e-9, rho) ==
          doctest::Approx(penalty_value(mcp, b + 1e-9, rho)).epsilon(1e-6));
  }
}

TEST_CASE("SCAD value equals the integral of its derivative") {
  // dP/dtheta scaled by rho: rho on [0, rho], (gamma rho - theta)/(gamma - 1)
  // on (rho, gamma rho], 0 beyond.
  const double rho = 0.4, g = 3.7;
  PenaltySpec scad = PenaltySpec::scad(g);
  auto deriv = [&](double x) {
    if (x <= rho) return rho;
    if (x <= g * rho) return (g * rho - x) / (g - 1.0);
    return 0.0;
  };
  for (double theta : {0.1, 0.4, 0.9, 1.4, 2.0, 5.0}) {
    // Simpson quadrature
    const int n = 20000;
    double h = theta / n, acc = deriv(0.0) + deriv(theta);
    for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * deriv(i * h);
    double integral = acc * h / 3.0;
    CHECK(penalty_value(scad, theta, rho) ==
          doctest::Approx(integral).epsilon(1e-8));
  }
}

TEST_CASE("threshold matches grid minimization") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> tdist(-4.0, 4.0);
  std::uniform_real_distribution<double> rdist(0.05, 1.5);
  std::uniform_real_distribution<double> gm(1.05, 8.0);
  std::uniform_real_distribution<double> gs(2.05, 8.0);
  for (int k = 0; k < 100; ++k) {
    double t = tdist(rng), r = rdist(rng);
    PenaltySpec specs[3] = {PenaltySpec::lasso(), PenaltySpec::mcp(gm(rng)),
                            PenaltySpec::scad(gs(rng))};
    for (const auto& spec : specs) {
      double closed = threshold(spec, t, r);
      double scanned = grid_threshold(spec, t, r);
      CHECK(std::abs(closed - scanned) < 2e-5);
    }
  }
}

TEST_CASE("threshold is odd and shrinking") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> tdist(0.0, 5.0);
  PenaltySpec specs[3] = {PenaltySpec::lasso(), PenaltySpec::mcp(2.3),
                          PenaltySpec::scad(3.7)};
  for (int k = 0; k < 200; ++k) {
    double t = tdist(rng);
    for (const auto& spec : specs) {
      double pos = threshold(spec, t, 0.4);
      double neg = threshold(spec, -t, 0.4);
      CHECK(pos == doctest::Approx(-neg));
      CHECK(std::abs(pos) <= t + 1e-12);
    }
  }
}

TEST_CASE("MC+ threshold approaches soft thresholding for large gamma") {
  PenaltySpec mcp = PenaltySpec::mcp(1e7);
  PenaltySpec lasso = PenaltySpec::lasso();
  for (double t : {-2.0, -0.6, 0.3, 1.5}) {
    CHECK(threshold(mcp, t, 0.4) ==
          doctest::Approx(threshold(lasso, t, 0.4)).epsilon(1e-5));
  }
}

TEST_CASE("threshold produces exact zeros") {
  PenaltySpec specs[3] = {PenaltySpec::lasso(), PenaltySpec::mcp(1.96),
                          PenaltySpec::scad(3.7)};
  for (const auto& spec : specs) {
    CHECK(threshold(spec, 0.3, 0.4) == 0.0);
    CHECK(threshold(spec, -0.3, 0.4) == 0.0);
  }
}

TEST_CASE("normal_cdf reference values") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
  CHECK(normal_cdf(-1.959963984540054) == doctest::Approx(0.025).epsilon(1e-7));
}

TEST_CASE("reparameterized parameter solves the calibration equation") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> rdist(0.001, 2.0);
  std::uniform_real_distribution<double> gdist(1.05, 50.0);
  for (int k = 0; k < 50; ++k) {
    double rho = rdist(rng), g = gdist(rng);
    double x = reparameterize_rho(rho, g);
    CHECK(x >= rho);
    double residual =
        normal_cdf(g * x) - g * normal_cdf(x) + (g - 1.0) * normal_cdf(rho);
    CHECK(std::abs(residual) < 1e-9);
    // independent scan: residual changes sign across the root
    CHECK(normal_cdf(g * (x - 1e-6)) - g * normal_cdf(x - 1e-6) +
              (g - 1.0) * normal_cdf(rho) >=
          -1e-12);
    CHECK(normal_cdf(g * (x + 1e-6)) - g * normal_cdf(x + 1e-6) +
              (g - 1.0) * normal_cdf(rho) <=
          1e-12);
  }
}

TEST_CASE("reparameterization is the identity for infinite gamma") {
  CHECK(reparameterize_rho(0.37, std::numeric_limits<double>::infinity()) ==
        0.37);
}

TEST_CASE("hinted and plain calibration agree") {
  for (double rho : {0.01, 0.2, 0.9}) {
    double plain = reparameterize_rho(rho, 1.96);
    CHECK(reparameterize_rho_hint(rho, 1.96, plain * 1.1) ==
          doctest::Approx(plain).epsilon(1e-9));
    CHECK(reparameterize_rho_hint(rho, 1.96, -1.0) ==
          doctest::Approx(plain).epsilon(1e-9));
  }
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(PenaltySpec::scad(2.0), parameter_error);
  CHECK_THROWS_AS(PenaltySpec::mcp(1.0), parameter_error);
  CHECK_THROWS_AS(penalty_value(PenaltySpec::lasso(), 1.0, -0.1),
                  parameter_error);
  CHECK_THROWS_AS(reparameterize_rho(0.0, 2.0), parameter_error);
}
