#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "sparsefactor/io.hpp"
#include "sparsefactor/path.hpp"

using namespace sparsefactor;

namespace {

SampleMoments pss_moments(std::uint64_t seed, int N = 200) {
  return sample_covariance(generate(pss_model(), N, seed));
}

}  // namespace

TEST_CASE("rho grid is log-spaced with exact endpoints") {
  PathGrid grid = build_grid_explicit(2.0, 5, 0.01,
                                      {std::numeric_limits<double>::infinity()});
  CHECK(grid.K() == 5);
  CHECK(grid.rhos.front() == doctest::Approx(2.0));
  CHECK(grid.rhos.back() == doctest::Approx(0.02));
  for (int k = 1; k < 5; ++k) {
    CHECK(grid.rhos[k] < grid.rhos[k - 1]);
    // constant ratio
    CHECK(grid.rhos[k] / grid.rhos[k - 1] ==
          doctest::Approx(grid.rhos[1] / grid.rhos[0]));
  }
}

TEST_CASE("gamma ladder starts at infinity and descends to the family floor") {
  PathGrid grid = build_grid(1.0, 3, 0.1, PenaltyFamily::mcp, 4);
  CHECK(grid.T() == 4);
  CHECK(std::isinf(grid.gammas[0]));
  CHECK(grid.gammas[1] == doctest::Approx(100.0));
  CHECK(grid.gammas.back() == doctest::Approx(1.01));
  for (int t = 2; t < grid.T(); ++t) CHECK(grid.gammas[t] < grid.gammas[t - 1]);

  PathGrid scad = build_grid(1.0, 3, 0.1, PenaltyFamily::scad, 3);
  CHECK(scad.gammas.back() == doctest::Approx(2.01));

  PathGrid lasso_only = build_grid(1.0, 3, 0.1, PenaltyFamily::lasso, 10);
  CHECK(lasso_only.T() == 1);
}

TEST_CASE("grid construction validates parameters") {
  CHECK_THROWS_AS(build_grid_explicit(0.0, 5, 0.1, {2.0}), parameter_error);
  CHECK_THROWS_AS(build_grid_explicit(1.0, 1, 0.1, {2.0}), parameter_error);
  CHECK_THROWS_AS(build_grid_explicit(1.0, 5, 1.5, {2.0}), parameter_error);
  CHECK_THROWS_AS(build_grid_explicit(1.0, 5, 0.1, {}), parameter_error);
}

TEST_CASE("initializer is a one-factor solution with zero spare columns") {
  SampleMoments mom = pss_moments(5);
  SolverOptions options;
  FactorModel init = init_loadings(mom, 3, options);
  CHECK(init.m() == 3);
  CHECK((init.Lambda.col(1).array() == 0.0).all());
  CHECK((init.Lambda.col(2).array() == 0.0).all());
  // column 1 is near-stationary for the one-factor likelihood
  FactorModel one;
  one.Lambda = init.Lambda.col(0);
  one.psi = init.psi;
  Eigen::MatrixXd grad = loading_gradient(one, mom);
  CHECK(grad.cwiseAbs().maxCoeff() / mom.N < 1e-2);
}

TEST_CASE("the largest grid rho zeroes out the whole loading matrix") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    SampleMoments mom = pss_moments(seed);
    SolverOptions options;
    FactorModel init = init_loadings(mom, 2, options);
    double rho_K = select_rho_max(mom, init, options);
    CHECK(rho_K > 0.0);
    for (double factor : {1.0, 1.05}) {
      FitResult result =
          fit(mom, 2, factor * rho_K, PenaltySpec::lasso(), init, options);
      CHECK((result.model.Lambda.array() == 0.0).all());
    }
  }
}

TEST_CASE("path cells carry consistent bookkeeping") {
  SampleMoments mom = pss_moments(9);
  PathOptions options;
  FactorModel init = init_loadings(mom, 2, options.solver);
  double rho_K = select_rho_max(mom, init, options.solver);
  PathGrid grid = build_grid_explicit(
      rho_K, 6, 0.01, {std::numeric_limits<double>::infinity(), 1.96});
  PathResult path = fit_path(mom, 2, grid, PenaltyFamily::mcp, options, 1);
  REQUIRE(int(path.cells.size()) == 2);
  REQUIRE(int(path.cells[0].size()) == 6);
  for (int t = 0; t < 2; ++t) {
    for (int k = 0; k < 6; ++k) {
      const PathCell& cell = path.cells[t][k];
      CHECK(cell.rho == doctest::Approx(grid.rhos[k]));
      CHECK(cell.df == degrees_of_freedom(cell.fit.model));
      CriterionSet expected =
          criteria(cell.fit.objective.loglik, cell.df, mom.N, mom.p);
      CHECK(cell.criteria.bic == doctest::Approx(expected.bic));
      if (std::isinf(cell.gamma)) {
        CHECK(cell.rho_star == doctest::Approx(cell.rho));
      } else {
        CHECK(cell.rho_star ==
              doctest::Approx(reparameterize_rho(cell.rho, cell.gamma)));
      }
    }
  }
  // sparsest at the top of the path
  CHECK(path.cells[0][0].df == 0);
}

TEST_CASE("paths are deterministic under a fixed seed") {
  SampleMoments mom = pss_moments(21);
  PathOptions options;
  FactorModel init = init_loadings(mom, 2, options.solver);
  double rho_K = select_rho_max(mom, init, options.solver);
  PathGrid grid = build_grid_explicit(
      rho_K, 5, 0.01, {std::numeric_limits<double>::infinity(), 3.0});
  PathResult a = fit_path(mom, 2, grid, PenaltyFamily::mcp, options, 99);
  PathResult b = fit_path(mom, 2, grid, PenaltyFamily::mcp, options, 99);
  CHECK(path_to_json(a) == path_to_json(b));
}

TEST_CASE("factor expansion never worsens the objective") {
  std::mt19937_64 rng(77);
  SampleMoments mom = pss_moments(33);
  PathOptions options;
  FactorModel init = init_loadings(mom, 2, options.solver);
  FitResult single =
      fit(mom, 2, 0.05, PenaltySpec::lasso(), init, options.solver);
  std::mt19937_64 expand_rng(5);
  FitResult expanded = maybe_expand_factors(single, mom, 2, 0.05,
                                            PenaltySpec::lasso(), options,
                                            expand_rng);
  CHECK(expanded.objective.total >= single.objective.total);
  // the initializer leaves column 2 empty; expansion should recover it
  CHECK((expanded.model.Lambda.col(1).array() != 0.0).any());
}

TEST_CASE("small penalties recover the unpenalized likelihood") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SampleMoments mom = pss_moments(100 + seed);
    SolverOptions options;
    options.em_tol = 1e-9;
    std::mt19937_64 rng(seed + 1);
    FactorModel init = testutil::random_model(8, 2, rng);
    FitResult ml = fit(mom, 2, 0.0, PenaltySpec::lasso(), init, options);
    FitResult tiny = fit(mom, 2, 1e-8, PenaltySpec::lasso(), init, options);
    CHECK(tiny.objective.loglik >= ml.objective.loglik - 1e-4);
  }
}
