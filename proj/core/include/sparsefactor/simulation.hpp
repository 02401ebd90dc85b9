#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sparsefactor/path.hpp"

namespace sparsefactor {

/// 6 x 2 loadings (0.95, 0.90, 0.85 | 0.80, 0.75, 0.70) with
/// Psi = diag(I - Lambda Lambda^T).
FactorModel model_a();

/// 1000 x 4 block loadings (0.95, 0.90, 0.85, 0.80 times 250-blocks of
/// ones) with Psi = diag(I - Lambda Lambda^T).
FactorModel model_b();

/// 8 x 2 perfect-simple-structure model with loadings 0.82 and
/// Psi = 0.32 I (the two-factor design used throughout the small examples).
FactorModel pss_model();

/// N draws of x = Lambda z + Psi^{1/2} e with independent standard normal z
/// and e; no p x p Cholesky. Deterministic under seed.
Eigen::MatrixXd generate(const FactorModel& model, int N, std::uint64_t seed);

/// Resolves column permutation and signs of the estimate against the truth
/// by exact assignment over permutations (m <= 8) maximizing the sum of
/// absolute column inner products; greedy with a warning flag beyond m = 8.
FactorModel align(const FactorModel& est, const FactorModel& truth,
                  bool* used_greedy = nullptr);

struct StudyMetrics {
  double mse_lambda = 0.0;
  double mse_psi = 0.0;
  double tpr = 0.0;
  double tnr = 0.0;
};

/// Accumulates aligned estimates against the truth across replications.
class MetricsAccumulator {
 public:
  explicit MetricsAccumulator(FactorModel truth);
  void add(const FactorModel& aligned_est);
  int count() const { return static_cast<int>(per_rep_.size()); }
  StudyMetrics mean() const;
  StudyMetrics standard_error() const;

 private:
  FactorModel truth_;
  std::vector<StudyMetrics> per_rep_;
};

struct StudyMethod {
  PenaltySpec spec;
  std::string name;
};

struct StudyConfig {
  FactorModel truth;             // generating model
  std::string model_name = "custom";
  int N = 200;
  int replications = 100;
  std::vector<StudyMethod> methods;
  std::vector<Criterion> criteria = {Criterion::aic, Criterion::bic,
                                     Criterion::caic};
  std::uint64_t seed = 1;
  int threads = 1;
  int grid_K = 30;
  double grid_delta = 0.001;
  PathOptions path_options;
};

struct StudyRow {
  std::string method;
  std::string criterion;
  StudyMetrics metrics;
  StudyMetrics standard_error;
  int replications_used = 0;
  int failures = 0;
};

struct StudyReport {
  std::string model_name;
  int N = 0;
  int replications = 0;
  std::uint64_t seed = 0;
  std::vector<StudyRow> rows;
};

/// Per replication: generate -> fit_path -> select per criterion -> align
/// -> accumulate. Failed replications are excluded with counts reported.
/// Replications parallelize by seed-splitting; the report is deterministic
/// for a fixed master seed.
StudyReport run_study(const StudyConfig& config);

/// Deterministic per-replication seed derivation (splitmix64 over the master
/// seed and replication index).
std::uint64_t split_seed(std::uint64_t master, std::uint64_t index);

}  // namespace sparsefactor
