#pragma once

#include <Eigen/Dense>

#include "sparsefactor/penalty.hpp"
#include "sparsefactor/types.hpp"

namespace sparsefactor {

/// S = (1/N) sum (x_n - xbar)(x_n - xbar)^T. Rejects non-finite entries and
/// N < 2. Mean-centering is internal.
SampleMoments sample_covariance(const Eigen::MatrixXd& data);

/// Gaussian log-likelihood -(N/2)[p log 2pi + log|Sigma| + tr(Sigma^-1 S)]
/// with Sigma = Lambda Lambda^T + Psi, evaluated through the Woodbury
/// identity and matrix-determinant lemma; no dense p x p inverse is formed.
/// Throws singular_model_error when the condition estimate exceeds 1e14.
double log_likelihood(const FactorModel& model, const SampleMoments& moments);

/// dl/dLambda = -N Sigma^-1 (Sigma - S) Sigma^-1 Lambda.
Eigen::MatrixXd loading_gradient(const FactorModel& model,
                                 const SampleMoments& moments);

/// loglik - N sum_ij rho P(|lambda_ij|) - (N/2) eta sum_i s_ii / psi_i.
PenalizedObjectiveValue penalized_objective(const FactorModel& model,
                                            const SampleMoments& moments,
                                            const PenaltySpec& spec,
                                            double rho, double eta);

/// Posterior mean of the common factors given one observation:
/// M^-1 Lambda^T Psi^-1 x with M = Lambda^T Psi^-1 Lambda + I_m.
Eigen::VectorXd posterior_scores(const FactorModel& model,
                                 const Eigen::VectorXd& x);

}  // namespace sparsefactor
