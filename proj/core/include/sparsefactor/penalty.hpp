#pragma once

#include <limits>

#include "sparsefactor/errors.hpp"

namespace sparsefactor {

enum class PenaltyFamily { lasso, scad, mcp };

/// Penalty family with concavity parameter gamma. gamma is ignored for the
/// lasso (conceptually +inf). SCAD requires gamma > 2, MC+ gamma > 1.
struct PenaltySpec {
  PenaltyFamily family = PenaltyFamily::lasso;
  double gamma = std::numeric_limits<double>::infinity();

  static PenaltySpec lasso();
  static PenaltySpec scad(double gamma = 3.7);
  static PenaltySpec mcp(double gamma);

  /// Throws parameter_error if gamma is outside the family's valid range.
  void validate() const;
};

/// rho * P(|theta|; rho; gamma) for the given family.
/// lasso: rho|theta|.
/// MC+:   rho(|theta| - theta^2/(2 rho gamma)) below rho*gamma, then
///        saturates at rho^2 gamma / 2.
/// SCAD:  closed-form integral of its derivative; saturates at
///        rho^2 (gamma+1)/2 beyond gamma*rho.
double penalty_value(const PenaltySpec& spec, double theta, double rho);

/// argmin over theta of (1/2)(theta - theta_tilde)^2 + rho_star P(|theta|),
/// using the family's closed form. Odd in theta_tilde; rho_star == 0 returns
/// theta_tilde unchanged. Ties at branch boundaries resolve to the more
/// shrunk branch.
double threshold(const PenaltySpec& spec, double theta_tilde, double rho_star);

/// Degrees-of-freedom calibration across the family: maps the lasso-scale
/// parameter rho to the parameter rho_star to use at concavity gamma, by
/// solving Phi(gamma x) - gamma Phi(x) = -(gamma - 1) Phi(rho) for x on
/// [rho, 50 rho gamma/(gamma-1)], with Phi the standard normal CDF.
/// Returns rho unchanged for gamma = +inf. Absolute tolerance 1e-10.
double reparameterize_rho(double rho, double gamma);

/// Same root, warm-started from a previous solution (used by the solver's
/// inner loop where the input drifts slowly between iterations).
double reparameterize_rho_hint(double rho, double gamma, double hint);

/// Standard normal cumulative distribution function.
double normal_cdf(double x);

}  // namespace sparsefactor
