#pragma once

#include <Eigen/Dense>

#include "sparsefactor/errors.hpp"

namespace sparsefactor {

/// Sufficient statistics of the Gaussian factor model: sample covariance S
/// (maximum-likelihood denominator N), sample size and dimension.
struct SampleMoments {
  Eigen::MatrixXd S;
  int N = 0;
  int p = 0;

  /// Validates symmetry (1e-12 relative) and positive semidefiniteness
  /// (eigenvalues >= -1e-10 * max eigenvalue). Throws invalid_data_error.
  /// A zero diagonal entry is permitted here; fitting rejects it.
  static SampleMoments make(Eigen::MatrixXd S, int N);
};

/// Factor model parameters: p x m loading matrix and positive unique
/// variances. Implied covariance is Lambda Lambda^T + diag(psi).
struct FactorModel {
  Eigen::MatrixXd Lambda;
  Eigen::VectorXd psi;

  int p() const { return static_cast<int>(Lambda.rows()); }
  int m() const { return static_cast<int>(Lambda.cols()); }

  /// Throws parameter_error on dimension mismatch or non-positive psi.
  void validate() const;
};

/// Decomposition of the penalized objective. total = loglik - penalty -
/// eta_term, stored exactly as computed.
struct PenalizedObjectiveValue {
  double loglik = 0.0;
  double penalty = 0.0;
  double eta_term = 0.0;
  double total = 0.0;
};

}  // namespace sparsefactor
