#include <benchmark/benchmark.h>

#include <random>

#include "sparsefactor/path.hpp"
#include "sparsefactor/simulation.hpp"

namespace sf = sparsefactor;

namespace {

sf::SampleMoments moments_for(const sf::FactorModel& truth, int N,
                              std::uint64_t seed) {
  return sf::sample_covariance(sf::generate(truth, N, seed));
}

void bm_threshold(benchmark::State& state) {
  sf::PenaltySpec spec = sf::PenaltySpec::scad(3.7);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(sf::threshold(spec, unif(rng), 0.4));
}
BENCHMARK(bm_threshold);

void bm_reparameterize(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.01, 1.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(sf::reparameterize_rho(unif(rng), 1.96));
}
BENCHMARK(bm_reparameterize);

void bm_e_step(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  sf::FactorModel truth = p >= 1000 ? sf::model_b() : sf::model_a();
  sf::SampleMoments moments = moments_for(truth, std::max(50, 2 * p), 11);
  for (auto _ : state) benchmark::DoNotOptimize(sf::e_step(truth, moments));
}
BENCHMARK(bm_e_step)->Arg(6)->Arg(1000);

void bm_log_likelihood(benchmark::State& state) {
  sf::FactorModel truth = sf::model_b();
  sf::SampleMoments moments = moments_for(truth, 100, 11);
  for (auto _ : state)
    benchmark::DoNotOptimize(sf::log_likelihood(truth, moments));
}
BENCHMARK(bm_log_likelihood);

void bm_fit_model_a(benchmark::State& state) {
  sf::FactorModel truth = sf::model_a();
  sf::SampleMoments moments = moments_for(truth, 200, 11);
  sf::SolverOptions options;
  sf::FactorModel init = sf::init_loadings(moments, 2, options);
  sf::PenaltySpec spec = sf::PenaltySpec::mcp(1.96);
  for (auto _ : state)
    benchmark::DoNotOptimize(sf::fit(moments, 2, 0.05, spec, init, options));
}
BENCHMARK(bm_fit_model_a);

}  // namespace

BENCHMARK_MAIN();
