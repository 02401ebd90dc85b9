#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "sparsefactor/solver.hpp"

using namespace sparsefactor;

TEST_CASE("E-step moments equal per-observation posterior sums") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 10; ++k) {
    FactorModel truth = testutil::random_model(6, 2, rng);
    Eigen::MatrixXd X = generate(truth, 40, rng());
    SampleMoments mom = sample_covariance(X);
    FactorModel model = testutil::random_model(6, 2, rng);
    EStepCache cache = e_step(model, mom);

    Eigen::RowVectorXd mean = X.colwise().mean();
    Eigen::MatrixXd C = (X.rowwise() - mean).transpose();  // p x N
    Eigen::MatrixXd W = model.Lambda.array().colwise() / model.psi.array();
    Eigen::MatrixXd M =
        model.Lambda.transpose() * W + Eigen::MatrixXd::Identity(2, 2);
    Eigen::MatrixXd Minv = M.inverse();

    // B = (1/N) sum z_n x_n^T and A = M^-1 + (1/N) sum z_n z_n^T with
    // z_n the posterior mean for the n-th centered observation.
    Eigen::MatrixXd B_sum = Eigen::MatrixXd::Zero(2, 6);
    Eigen::MatrixXd A_direct = Minv;
    for (int n = 0; n < C.cols(); ++n) {
      Eigen::VectorXd z = Minv * W.transpose() * C.col(n);
      B_sum += z * C.col(n).transpose() / double(C.cols());
      A_direct += z * z.transpose() / double(C.cols());
    }
    CHECK((cache.B - B_sum).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((cache.A - A_direct).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((cache.M - M).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("coordinate update minimizes the scalar surrogate for the lasso") {
  std::mt19937_64 rng(13);
  FactorModel model = testutil::random_model(5, 2, rng);
  SampleMoments mom = testutil::random_moments(5, 2, 60, rng);
  EStepCache cache = e_step(model, mom);
  PenaltySpec lasso = PenaltySpec::lasso();
  const double rho = 0.2;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 2; ++j) {
      Eigen::VectorXd row = model.Lambda.row(i);
      double updated =
          coordinate_update(row, j, cache.B.col(i), cache.A, model.psi(i),
                            rho, lasso);
      // scan the exact coordinate objective
      // q(theta) = (a_jj/2) theta^2 - (b_ij - cross) theta + psi_i rho |theta|
      double a_jj = cache.A(j, j);
      double cross = cache.A.col(j).dot(row) - a_jj * row(j);
      auto q = [&](double th) {
        return 0.5 * a_jj * th * th - (cache.B(j, i) - cross) * th +
               model.psi(i) * rho * std::abs(th);
      };
      double best = 0.0, bestv = q(0.0);
      for (double th = -5.0; th <= 5.0; th += 1e-4) {
        double v = q(th);
        if (v < bestv) {
          bestv = v;
          best = th;
        }
      }
      CHECK(std::abs(updated - best) < 2e-4);
    }
  }
}

TEST_CASE("unpenalized coordinate update returns the least-squares point") {
  std::mt19937_64 rng(37);
  FactorModel model = testutil::random_model(4, 2, rng);
  SampleMoments mom = testutil::random_moments(4, 2, 60, rng);
  EStepCache cache = e_step(model, mom);
  Eigen::VectorXd row = model.Lambda.row(2);
  double u = coordinate_update(row, 1, cache.B.col(2), cache.A, model.psi(2),
                               0.0, PenaltySpec::lasso());
  double expected =
      (cache.B(1, 2) - cache.A(0, 1) * row(0)) / cache.A(1, 1);
  CHECK(u == doctest::Approx(expected));
}

TEST_CASE("unique-variance update matches its closed form") {
  std::mt19937_64 rng(41);
  FactorModel model = testutil::random_model(6, 2, rng);
  SampleMoments mom = testutil::random_moments(6, 2, 80, rng);
  EStepCache cache = e_step(model, mom);
  SolverOptions options;
  options.cd_max_sweeps = 0;  // keep Lambda fixed; test the psi update alone
  FactorModel next = m_step(cache, mom, model, 0.0, PenaltySpec::lasso(),
                            options);
  for (int i = 0; i < 6; ++i) {
    Eigen::VectorXd row = model.Lambda.row(i);
    double expected = mom.S(i, i) - 2.0 * row.dot(cache.B.col(i)) +
                      row.dot(cache.A * row) + options.eta * mom.S(i, i);
    CHECK(next.psi(i) ==
          doctest::Approx(std::max(expected, options.psi_floor)));
  }
}

TEST_CASE("EM never decreases the penalized objective") {
  std::mt19937_64 rng(43);
  SolverOptions options;
  PenaltySpec specs[3] = {PenaltySpec::lasso(), PenaltySpec::mcp(1.96),
                          PenaltySpec::scad(3.7)};
  for (int k = 0; k < 6; ++k) {
    SampleMoments mom = sample_covariance(generate(pss_model(), 100, rng()));
    for (const auto& spec : specs) {
      for (double rho : {0.01, 0.1}) {
        FactorModel state = testutil::random_model(8, 2, rng);
        double prev =
            penalized_objective(state, mom, spec, rho, options.eta).total;
        for (int it = 0; it < 30; ++it) {
          EStepCache cache = e_step(state, mom);
          state = m_step(cache, mom, state, rho, spec, options);
          double cur =
              penalized_objective(state, mom, spec, rho, options.eta).total;
          CHECK(cur >= prev - 1e-10);
          prev = cur;
        }
      }
    }
  }
}

TEST_CASE("fit converges and is stationary without a penalty") {
  std::mt19937_64 rng(47);
  SampleMoments mom = sample_covariance(generate(pss_model(), 500, rng()));
  SolverOptions options;
  options.em_tol = 1e-10;
  FactorModel init = testutil::random_model(8, 2, rng);
  FitResult result =
      fit(mom, 2, 0.0, PenaltySpec::lasso(), init, options);
  CHECK(result.converged);
  Eigen::MatrixXd grad = loading_gradient(result.model, mom);
  CHECK(grad.cwiseAbs().maxCoeff() / mom.N < 1e-3);
}

TEST_CASE("thresholded loadings are bit-exact zeros") {
  std::mt19937_64 rng(53);
  SampleMoments mom = sample_covariance(generate(pss_model(), 150, rng()));
  SolverOptions options;
  FactorModel init = testutil::random_model(8, 2, rng);
  FitResult result = fit(mom, 2, 0.15, PenaltySpec::mcp(1.96), init, options);
  int zeros = 0;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 2; ++j)
      if (result.model.Lambda(i, j) == 0.0) ++zeros;
  CHECK(zeros > 0);
}

TEST_CASE("converged fits carry no single-entry loading column") {
  std::mt19937_64 rng(59);
  for (int k = 0; k < 10; ++k) {
    SampleMoments mom = sample_covariance(generate(pss_model(), 120, rng()));
    FactorModel init = testutil::random_model(8, 3, rng);
    FitResult result =
        fit(mom, 3, 0.08, PenaltySpec::scad(3.7), init, SolverOptions{});
    for (int j = 0; j < 3; ++j) {
      int nnz = 0;
      for (int i = 0; i < 8; ++i)
        if (result.model.Lambda(i, j) != 0.0) ++nnz;
      CHECK(nnz != 1);
    }
  }
}

TEST_CASE("psi stays at or above the floor") {
  std::mt19937_64 rng(61);
  SampleMoments mom = sample_covariance(generate(pss_model(), 60, rng()));
  FitResult result = fit(mom, 2, 0.02, PenaltySpec::lasso(),
                         testutil::random_model(8, 2, rng), SolverOptions{});
  CHECK(result.model.psi.minCoeff() >= SolverOptions{}.psi_floor);
}

TEST_CASE("fit validates its inputs") {
  std::mt19937_64 rng(67);
  SampleMoments mom = testutil::random_moments(5, 2, 40, rng);
  FactorModel init = testutil::random_model(5, 2, rng);
  CHECK_THROWS_AS(fit(mom, 0, 0.1, PenaltySpec::lasso(), init, {}),
                  parameter_error);
  CHECK_THROWS_AS(fit(mom, 2, -0.1, PenaltySpec::lasso(), init, {}),
                  parameter_error);
  FactorModel bad = testutil::random_model(4, 2, rng);
  CHECK_THROWS_AS(fit(mom, 2, 0.1, PenaltySpec::lasso(), bad, {}),
                  parameter_error);
}
