#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sparsefactor/model_core.hpp"
#include "sparsefactor/penalty.hpp"
#include "sparsefactor/types.hpp"

namespace sparsefactor {

/// Posterior factor moments given the current parameters. B's i-th column is
/// b_i = M^-1 Lambda^T Psi^-1 s_i; A = M^-1 + M^-1 Lambda^T Psi^-1 S Psi^-1
/// Lambda M^-1.
struct EStepCache {
  Eigen::MatrixXd M;  // m x m, SPD
  Eigen::MatrixXd B;  // m x p
  Eigen::MatrixXd A;  // m x m, SPD
};

struct SolverOptions {
  double eta = 0.001;
  double em_tol = 1e-7;        // relative change of the penalized objective
  int em_max_iter = 2000;
  double cd_tol = 1e-7;        // max absolute coordinate change per sweep
  int cd_max_sweeps = 500;
  double psi_floor = 1e-6;
};

struct FitResult {
  FactorModel model;
  PenalizedObjectiveValue objective;
  int iterations = 0;
  bool converged = false;
  bool psi_floor_hit = false;  // near-improper solution encountered
};

EStepCache e_step(const FactorModel& model, const SampleMoments& moments);

/// Single coordinate update of Eq-style penalized squared-error loss:
/// theta_tilde = (b_ij - sum_{k != j} a_kj lambda_ik) / a_jj, thresholded at
/// the reparameterized effective parameter rho*(psi_i rho / a_jj, gamma).
/// b_i is the i-th column of the cache's B; lambda_row the i-th row of
/// Lambda.
double coordinate_update(const Eigen::VectorXd& lambda_row, int j,
                         const Eigen::VectorXd& b_i, const Eigen::MatrixXd& A,
                         double psi_i, double rho, const PenaltySpec& spec);

/// Coordinate-descent sweeps over Lambda (row-major order) until cd_tol or
/// cd_max_sweeps, then the closed-form Psi update
/// psi_i = s_ii - 2 lambda_i^T b_i + lambda_i^T A lambda_i + eta s_ii,
/// floored at psi_floor. Each accepted coordinate step is checked against
/// the expected penalized objective so EM ascent holds exactly.
FactorModel m_step(const EStepCache& cache, const SampleMoments& moments,
                   const FactorModel& model_in, double rho,
                   const PenaltySpec& spec, const SolverOptions& options,
                   bool* psi_floor_hit = nullptr);

/// Penalized EM at fixed (rho, gamma). The penalized objective (eta term
/// included) is non-decreasing across iterations; a decrease beyond 1e-8
/// raises ascent_violation_error. Zeros produced by thresholding are
/// bit-exact. Converged solutions never carry a loading column with exactly
/// one nonzero entry.
FitResult fit(const SampleMoments& moments, int m, double rho,
              const PenaltySpec& spec, const FactorModel& init,
              const SolverOptions& options);

}  // namespace sparsefactor
