#include "sparsefactor/path.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace sparsefactor {

namespace {

PenaltySpec row_spec(PenaltyFamily family, double gamma) {
  if (std::isinf(gamma)) return PenaltySpec::lasso();
  PenaltySpec s{family, gamma};
  s.validate();
  return s;
}

Eigen::VectorXd leading_eigen_column(const SampleMoments& moments) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(moments.S);
  const int last = moments.p - 1;
  double e1 = std::max(es.eigenvalues()(last), 0.0);
  return std::sqrt(e1) * es.eigenvectors().col(last);
}

// Leading q eigenpairs of a symmetric matrix via orthogonal iteration;
// avoids a full O(p^3) decomposition when p is large. Columns are scaled
// by sqrt(max(eigenvalue, 0)).
Eigen::MatrixXd residual_columns(const Eigen::MatrixXd& R, int q) {
  const int p = static_cast<int>(R.rows());
  std::vector<int> order(p);
  for (int i = 0; i < p; ++i) order[i] = i;
  std::partial_sort(order.begin(), order.begin() + q, order.end(),
                    [&](int a, int b) { return R(a, a) > R(b, b); });
  Eigen::MatrixXd Q(p, q);
  for (int j = 0; j < q; ++j) Q.col(j) = R.col(order[j]);
  for (int it = 0; it < 50; ++it) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Q);
    Q = qr.householderQ() * Eigen::MatrixXd::Identity(p, q);
    Q = R * Q;
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Q);
  Q = qr.householderQ() * Eigen::MatrixXd::Identity(p, q);
  for (int j = 0; j < q; ++j) {
    double ev = Q.col(j).dot(R * Q.col(j));
    Q.col(j) *= std::sqrt(std::max(ev, 0.0));
  }
  return Q;
}

// Deterministic expansion candidate for concave penalties: fill the zero
// columns with residual eigen directions, settle by an unpenalized fit,
// keep only the dominant loading per row, and refit with the penalty. The
// screen is non-destructive: the refit re-activates any coordinate whose
// update exceeds the threshold.
FitResult concave_expand_candidate(const FitResult& current,
                                   const SampleMoments& moments, int m,
                                   double rho, const PenaltySpec& spec,
                                   const std::vector<int>& zero_cols,
                                   const SolverOptions& options) {
  FactorModel start = current.model;
  Eigen::MatrixXd R =
      moments.S - start.Lambda * start.Lambda.transpose();
  Eigen::MatrixXd cols =
      residual_columns(R, static_cast<int>(zero_cols.size()));
  for (std::size_t q = 0; q < zero_cols.size(); ++q)
    start.Lambda.col(zero_cols[q]) = cols.col(static_cast<int>(q));
  start.psi = (moments.S.diagonal() -
               start.Lambda.cwiseAbs2().rowwise().sum())
                  .cwiseMax(options.psi_floor);
  FitResult settled = fit(moments, m, 0.0, PenaltySpec::lasso(), start, options);
  FactorModel screened = settled.model;
  for (int i = 0; i < screened.p(); ++i) {
    int jmax = 0;
    screened.Lambda.row(i).cwiseAbs().maxCoeff(&jmax);
    for (int j = 0; j < screened.m(); ++j)
      if (j != jmax) screened.Lambda(i, j) = 0.0;
  }
  return fit(moments, m, rho, spec, screened, options);
}

}  // namespace

FactorModel init_loadings(const SampleMoments& moments, int m,
                          const SolverOptions& options) {
  if (m < 1) throw parameter_error("init_loadings: m must be >= 1");
  if ((moments.S.diagonal().array() <= 0.0).any())
    throw invalid_data_error(
        "init_loadings: sample covariance has a zero diagonal entry");

  Eigen::VectorXd column = leading_eigen_column(moments);
  FactorModel one;
  one.Lambda = column;
  one.psi = (moments.S.diagonal() - column.cwiseAbs2())
                .cwiseMax(options.psi_floor);
  try {
    FitResult ml = fit(moments, 1, 0.0, PenaltySpec::lasso(), one, options);
    if (ml.converged) column = ml.model.Lambda.col(0);
  } catch (const error&) {
    // fall back to the eigen column
  }

  FactorModel out;
  out.Lambda = Eigen::MatrixXd::Zero(moments.p, m);
  out.Lambda.col(0) = column;
  out.psi = (moments.S.diagonal() - column.cwiseAbs2())
                .cwiseMax(options.psi_floor);
  return out;
}

double select_rho_max(const SampleMoments& moments, const FactorModel& init,
                      const SolverOptions& options) {
  if (moments.p < 2)
    throw parameter_error("select_rho_max: path undefined for p = 1");
  init.validate();
  const int m = init.m();
  int alpha = 0;
  init.Lambda.col(0).cwiseAbs().maxCoeff(&alpha);
  if (init.Lambda(alpha, 0) == 0.0)
    throw parameter_error("select_rho_max: first initializer column is zero");

  const int H = 10;
  double rho_K = 0.0;
  for (int h = 1; h <= H; ++h) {
    const double xi = 0.1 * h;
    FactorModel probe;
    probe.Lambda = Eigen::MatrixXd::Zero(moments.p, m);
    probe.Lambda(alpha, 0) = xi * init.Lambda(alpha, 0);
    probe.psi = init.psi;

    // One Psi-update pass with Lambda held fixed.
    EStepCache cache = e_step(probe, moments);
    Eigen::VectorXd psi_hat(moments.p);
    for (int i = 0; i < moments.p; ++i) {
      Eigen::VectorXd row = probe.Lambda.row(i);
      double q = moments.S(i, i) - 2.0 * row.dot(cache.B.col(i)) +
                 row.dot(cache.A * row);
      psi_hat(i) =
          std::max(q + options.eta * moments.S(i, i), options.psi_floor);
    }
    probe.psi = psi_hat;

    EStepCache cache2 = e_step(probe, moments);
    double rho_h = 0.0;
    for (int i = 0; i < moments.p; ++i) {
      if (i == alpha) continue;
      rho_h = std::max(rho_h, std::abs(cache2.B(0, i)) / psi_hat(i));
    }
    rho_K = std::max(rho_K, rho_h);
  }
  if (!(rho_K > 0.0))
    throw numerical_error("select_rho_max: probe produced no positive bound");

  // The probe bound only guarantees that zeros stay zero from the
  // single-entry configuration; verify the endpoint by running the solver
  // from the full initializer and enlarge until the fit collapses exactly.
  auto collapses = [&](double rho) {
    FitResult r = fit(moments, m, rho, PenaltySpec::lasso(), init, options);
    return (r.model.Lambda.array() == 0.0).all();
  };
  auto endpoint_ok = [&](double rho) {
    return collapses(rho) && collapses(1.05 * rho);
  };
  if (endpoint_ok(rho_K)) return rho_K;
  double hi = rho_K;
  int grow = 0;
  do {
    hi *= 1.25;
    if (++grow > 60)
      throw numerical_error("select_rho_max: endpoint never collapses");
  } while (!endpoint_ok(hi));
  double lo = rho_K;
  for (int it = 0; it < 12; ++it) {
    double mid = std::sqrt(lo * hi);
    if (endpoint_ok(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

PathGrid build_grid(double rho_K, int K, double delta, PenaltyFamily family,
                    int T) {
  std::vector<double> gammas;
  gammas.push_back(std::numeric_limits<double>::infinity());
  if (family != PenaltyFamily::lasso && T >= 2) {
    const double gamma_min = family == PenaltyFamily::mcp ? 1.01 : 2.01;
    const double hi = std::log(100.0);
    const double lo = std::log(gamma_min);
    const int n = T - 1;
    for (int j = 0; j < n; ++j) {
      double f = (n == 1) ? 0.0 : double(j) / double(n - 1);
      gammas.push_back(std::exp(hi + (lo - hi) * f));
    }
  }
  return build_grid_explicit(rho_K, K, delta, std::move(gammas));
}

PathGrid build_grid_explicit(double rho_K, int K, double delta,
                             std::vector<double> gammas) {
  if (!(rho_K > 0.0)) throw parameter_error("build_grid: rho_K must be > 0");
  if (K < 2) throw parameter_error("build_grid: K must be >= 2");
  if (!(delta > 0.0 && delta < 1.0))
    throw parameter_error("build_grid: delta must be in (0, 1)");
  if (gammas.empty()) throw parameter_error("build_grid: empty gamma list");
  PathGrid grid;
  grid.gammas = std::move(gammas);
  grid.rhos.resize(K);
  for (int k = 0; k < K; ++k)
    grid.rhos[k] = rho_K * std::pow(delta, double(k) / double(K - 1));
  return grid;
}

FitResult maybe_expand_factors(const FitResult& current,
                               const SampleMoments& moments, int m,
                               double rho, const PenaltySpec& spec,
                               const PathOptions& options,
                               std::mt19937_64& rng) {
  int m0 = 0;
  std::vector<int> zero_cols;
  for (int j = 0; j < current.model.m(); ++j) {
    if ((current.model.Lambda.col(j).array() != 0.0).any())
      ++m0;
    else
      zero_cols.push_back(j);
  }
  if (m0 >= m) return current;

  FitResult best = current;
  if (spec.family != PenaltyFamily::lasso) {
    try {
      FitResult refit = concave_expand_candidate(current, moments, m, rho,
                                                 spec, zero_cols,
                                                 options.solver);
      if (refit.objective.total > best.objective.total) best = refit;
    } catch (const error&) {
      // candidate failures are skipped
    }
  }

  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  for (int r = 0; r < options.random_restarts; ++r) {
    FactorModel start = current.model;
    for (int j : zero_cols)
      for (int i = 0; i < start.p(); ++i) start.Lambda(i, j) = unif(rng);
    try {
      FitResult refit = fit(moments, m, rho, spec, start, options.solver);
      if (refit.objective.total > best.objective.total) best = refit;
    } catch (const error&) {
      // refit failures are skipped
    }
  }
  return best;
}

PathResult fit_path(const SampleMoments& moments, int m, const PathGrid& grid,
                    PenaltyFamily family, const PathOptions& options,
                    std::uint64_t seed) {
  if (grid.K() < 1 || grid.T() < 1)
    throw parameter_error("fit_path: empty grid");
  std::mt19937_64 rng(seed);
  PathResult result;
  result.grid = grid;
  result.seed = seed;
  result.options = options.solver;
  result.cells.assign(grid.T(), std::vector<PathCell>(grid.K()));

  FactorModel init = init_loadings(moments, m, options.solver);

  for (int t = 0; t < grid.T(); ++t) {
    const double gamma = grid.gammas[t];
    const PenaltySpec spec = row_spec(family, gamma);
    FactorModel warm = init;
    for (int k = 0; k < grid.K(); ++k) {
      const double rho = grid.rhos[k];
      const FactorModel& start = (t == 0) ? warm : result.cells[t - 1][k].fit.model;
      PathCell& cell = result.cells[t][k];
      try {
        cell.fit = fit(moments, m, rho, spec, start, options.solver);
        cell.fit =
            maybe_expand_factors(cell.fit, moments, m, rho, spec, options, rng);
      } catch (const ascent_violation_error& e) {
        std::ostringstream msg;
        msg << e.what() << " [path cell t=" << t << " k=" << k
            << " gamma=" << gamma << " rho=" << rho << "]";
        throw ascent_violation_error(msg.str());
      }
      if (t == 0) warm = cell.fit.model;
      cell.rho = rho;
      cell.gamma = gamma;
      cell.rho_star =
          std::isinf(gamma) ? rho : reparameterize_rho(rho, gamma);
      cell.df = degrees_of_freedom(cell.fit.model);
      cell.criteria =
          criteria(cell.fit.objective.loglik, cell.df, moments.N, moments.p);
    }
  }
  return result;
}

}  // namespace sparsefactor
