#pragma once

#include <random>

#include <Eigen/Dense>

#include "sparsefactor/simulation.hpp"

namespace testutil {

inline sparsefactor::FactorModel random_model(int p, int m,
                                              std::mt19937_64& rng,
                                              double sparsity = 0.0) {
  std::normal_distribution<double> gauss(0.0, 0.5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  sparsefactor::FactorModel model;
  model.Lambda.resize(p, m);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < m; ++j)
      model.Lambda(i, j) = unif(rng) < sparsity ? 0.0 : gauss(rng);
  model.psi.resize(p);
  std::uniform_real_distribution<double> pu(0.2, 1.5);
  for (int i = 0; i < p; ++i) model.psi(i) = pu(rng);
  return model;
}

inline sparsefactor::SampleMoments random_moments(int p, int m, int N,
                                                  std::mt19937_64& rng) {
  sparsefactor::FactorModel truth = random_model(p, m, rng);
  return sparsefactor::sample_covariance(
      sparsefactor::generate(truth, N, rng()));
}

inline Eigen::MatrixXd dense_sigma(const sparsefactor::FactorModel& model) {
  Eigen::MatrixXd sigma = model.Lambda * model.Lambda.transpose();
  sigma += model.psi.asDiagonal();
  return sigma;
}

inline double dense_log_likelihood(const sparsefactor::FactorModel& model,
                                   const sparsefactor::SampleMoments& mom) {
  Eigen::MatrixXd sigma = dense_sigma(model);
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  double logdet = 0.0;
  for (int i = 0; i < mom.p; ++i)
    logdet += 2.0 * std::log(llt.matrixL()(i, i));
  double trace = llt.solve(mom.S).trace();
  return -0.5 * mom.N *
         (mom.p * std::log(2.0 * M_PI) + logdet + trace);
}

}  // namespace testutil
