#include "sparsefactor/penalty.hpp"

#include <cmath>
#include <sstream>

namespace sparsefactor {

namespace {

double sgn(double x) { return x < 0.0 ? -1.0 : 1.0; }

double soft(double t, double r) {
  double a = std::abs(t) - r;
  return a > 0.0 ? sgn(t) * a : 0.0;
}

}  // namespace

PenaltySpec PenaltySpec::lasso() {
  return {PenaltyFamily::lasso, std::numeric_limits<double>::infinity()};
}

PenaltySpec PenaltySpec::scad(double gamma) {
  PenaltySpec s{PenaltyFamily::scad, gamma};
  s.validate();
  return s;
}

PenaltySpec PenaltySpec::mcp(double gamma) {
  PenaltySpec s{PenaltyFamily::mcp, gamma};
  s.validate();
  return s;
}

void PenaltySpec::validate() const {
  switch (family) {
    case PenaltyFamily::lasso:
      return;
    case PenaltyFamily::scad:
      if (!(gamma > 2.0))
        throw parameter_error("SCAD requires gamma > 2, got " +
                              std::to_string(gamma));
      return;
    case PenaltyFamily::mcp:
      if (!(gamma > 1.0 + 1e-8))
        throw parameter_error("MC+ requires gamma > 1, got " +
                              std::to_string(gamma));
      return;
  }
  throw parameter_error("unknown penalty family");
}

double penalty_value(const PenaltySpec& spec, double theta, double rho) {
  if (rho == 0.0) return 0.0;
  if (rho < 0.0) throw parameter_error("penalty_value: rho must be >= 0");
  spec.validate();
  const double a = std::abs(theta);
  const double g = spec.gamma;
  switch (spec.family) {
    case PenaltyFamily::lasso:
      return rho * a;
    case PenaltyFamily::mcp:
      if (a < rho * g) return rho * (a - a * a / (2.0 * rho * g));
      return rho * rho * g / 2.0;
    case PenaltyFamily::scad:
      if (a <= rho) return rho * a;
      if (a <= g * rho)
        return (2.0 * g * rho * a - a * a - rho * rho) / (2.0 * (g - 1.0));
      return rho * rho * (g + 1.0) / 2.0;
  }
  throw parameter_error("unknown penalty family");
}

double threshold(const PenaltySpec& spec, double theta_tilde,
                 double rho_star) {
  if (rho_star == 0.0) return theta_tilde;
  if (rho_star < 0.0) throw parameter_error("threshold: rho_star must be > 0");
  spec.validate();
  const double t = theta_tilde;
  const double a = std::abs(t);
  const double g = spec.gamma;
  switch (spec.family) {
    case PenaltyFamily::lasso:
      return soft(t, rho_star);
    case PenaltyFamily::mcp:
      if (a <= rho_star * g) return soft(t, rho_star) / (1.0 - 1.0 / g);
      return t;
    case PenaltyFamily::scad:
      if (a <= 2.0 * rho_star) return soft(t, rho_star);
      if (a <= rho_star * g)
        return ((g - 1.0) * t - sgn(t) * rho_star * g) / (g - 2.0);
      return t;
  }
  throw parameter_error("unknown penalty family");
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Calibration residual; positive at x = rho, decreasing in x past the root.
double calib_residual(double x, double gamma, double phi_rho) {
  return normal_cdf(gamma * x) - gamma * normal_cdf(x) +
         (gamma - 1.0) * phi_rho;
}

double normal_pdf(double x) {
  static const double inv_sqrt_2pi = 0.3989422804014327;
  return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

double solve_calibration(double rho, double gamma, double hint) {
  const double phi_rho = normal_cdf(rho);
  double lo = rho;
  double hi = 50.0 * rho * gamma / (gamma - 1.0);
  double flo = calib_residual(lo, gamma, phi_rho);
  double fhi = calib_residual(hi, gamma, phi_rho);
  // The root scales like rho^(1/3) as rho -> 0, so a linear-in-rho cap can
  // fall short; grow it until the residual changes sign (it is negative at
  // infinity, where it equals (gamma - 1)(Phi(rho) - 1)).
  for (int grow = 0; grow < 200 && fhi > 0.0; ++grow) {
    hi *= 2.0;
    fhi = calib_residual(hi, gamma, phi_rho);
  }
  if (flo < 0.0 || fhi > 0.0) {
    std::ostringstream msg;
    msg << "calibration residual has no sign change on bracket: rho=" << rho
        << " gamma=" << gamma << " f(lo)=" << flo << " f(hi)=" << fhi;
    throw calibration_error(msg.str());
  }
  double x = (hint > lo && hint < hi) ? hint : 0.5 * (lo + hi);
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    double f = calib_residual(x, gamma, phi_rho);
    if (f > 0.0)
      lo = x;
    else
      hi = x;
    // Newton step, safeguarded by the bracket.
    double d = gamma * (normal_pdf(gamma * x) - normal_pdf(x));
    double xn = (d != 0.0) ? x - f / d : 0.5 * (lo + hi);
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    x = xn;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double reparameterize_rho(double rho, double gamma) {
  return reparameterize_rho_hint(rho, gamma, -1.0);
}

double reparameterize_rho_hint(double rho, double gamma, double hint) {
  if (std::isinf(gamma)) return rho;
  if (!(rho > 0.0)) throw parameter_error("reparameterize_rho: rho must be > 0");
  if (!(gamma > 1.0)) throw parameter_error("reparameterize_rho: gamma must be > 1");
  return solve_calibration(rho, gamma, hint);
}

}  // namespace sparsefactor
