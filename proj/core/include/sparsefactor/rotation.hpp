#pragma once

#include <cstdint>

#include "sparsefactor/solver.hpp"

namespace sparsefactor {

enum class RotationCriterion { varimax, l1 };

/// Lambda_rotated = Lambda * T with T orthogonal; row sums of squares are
/// preserved. criterion_value is the unsmoothed sum of |lambda| for the L1
/// criterion and the negated varimax criterion for varimax (both minimized).
struct RotationResult {
  Eigen::MatrixXd Lambda_rotated;
  Eigen::MatrixXd T;
  double criterion_value = 0.0;
  int iterations = 0;
};

struct RotationOptions {
  int random_starts = 30;
  int max_iterations = 500;
  std::uint64_t seed = 1;
};

/// Unpenalized ML factor analysis: the solver at rho = 0, eigen-initialized
/// in all m columns. Warns (via the converged flag) on non-convergence;
/// N <= p is allowed but fragile.
FitResult ml_fit(const SampleMoments& moments, int m,
                 const SolverOptions& options = {});

/// Gradient-projection rotation with step halving over random orthogonal
/// starts. The L1 criterion is smoothed by sqrt(lambda^2 + eps^2) with eps
/// annealed from 1e-6 to 1e-9. Columns are sign-fixed (largest |entry|
/// positive) and sorted by sum of squares descending.
RotationResult rotate(const Eigen::MatrixXd& Lambda,
                      RotationCriterion criterion,
                      const RotationOptions& options = {});

/// Two-step baseline: ml_fit then rotate. m = 1 returns the identity
/// rotation.
RotationResult two_step(const SampleMoments& moments, int m,
                        RotationCriterion criterion,
                        const SolverOptions& solver_options = {},
                        const RotationOptions& rotation_options = {});

}  // namespace sparsefactor
