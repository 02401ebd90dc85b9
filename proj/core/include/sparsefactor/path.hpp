#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "sparsefactor/selection.hpp"
#include "sparsefactor/solver.hpp"

namespace sparsefactor {

/// Grid of penalty strengths (stored descending, rho_K first) and concavity
/// values (lasso/inf first, descending toward the family minimum).
struct PathGrid {
  std::vector<double> rhos;
  std::vector<double> gammas;

  int K() const { return static_cast<int>(rhos.size()); }
  int T() const { return static_cast<int>(gammas.size()); }
};

struct PathCell {
  FitResult fit;
  double rho = 0.0;
  double gamma = 0.0;
  double rho_star = 0.0;  // reparameterized penalty parameter at this gamma
  int df = 0;
  CriterionSet criteria;
};

struct PathResult {
  PathGrid grid;
  std::vector<std::vector<PathCell>> cells;  // [t][k], t indexes gammas
  std::uint64_t seed = 0;
  SolverOptions options;
};

struct PathOptions {
  SolverOptions solver;
  int random_restarts = 5;  // factor-expansion refits per cell
};

/// One-factor ML solution in column 1 (unpenalized EM started from the
/// leading eigenpair of S), remaining columns zero;
/// psi_i = s_ii - lambda_i1^2 floored. Falls back to the eigen column if the
/// one-factor EM does not converge.
FactorModel init_loadings(const SampleMoments& moments, int m,
                          const SolverOptions& options = {});

/// Smallest rho at which the whole loading matrix is driven to zero,
/// scanned over single-entry configurations xi^(h) = 0.1 h, h = 1..10.
double select_rho_max(const SampleMoments& moments, const FactorModel& init,
                      const SolverOptions& options = {});

/// rho values log-spaced from rho_K down to delta * rho_K; gamma ladder
/// [inf, then T-1 values log-spaced from 100 down to the family minimum
/// (1.01 for MC+, 2.01 for SCAD)]. T = 1 gives a lasso-only path.
PathGrid build_grid(double rho_K, int K, double delta, PenaltyFamily family,
                    int T);

/// Grid with an explicit gamma list (e.g. {inf, gamma} for a fixed-gamma
/// method warm-started from the lasso row).
PathGrid build_grid_explicit(double rho_K, int K, double delta,
                             std::vector<double> gammas);

/// Pathwise driver: lasso row first from rho_K downward with warm starts;
/// each later gamma row warm-starts from the previous gamma at the same rho.
/// Runs the factor-expansion check after every fit and stores df and
/// criteria per cell. Deterministic given (moments, grid, seed, options).
PathResult fit_path(const SampleMoments& moments, int m, const PathGrid& grid,
                    PenaltyFamily family, const PathOptions& options,
                    std::uint64_t seed);

/// If the fitted loadings use fewer than m nonzero columns, refits from
/// random initializations (zero columns replaced by U[-0.5, 0.5] entries)
/// and keeps the best penalized objective. Never returns a worse objective
/// than `current`.
FitResult maybe_expand_factors(const FitResult& current,
                               const SampleMoments& moments, int m,
                               double rho, const PenaltySpec& spec,
                               const PathOptions& options,
                               std::mt19937_64& rng);

}  // namespace sparsefactor
