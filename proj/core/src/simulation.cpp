#include "sparsefactor/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

namespace sparsefactor {

namespace {

FactorModel with_unit_diagonal_psi(Eigen::MatrixXd Lambda) {
  FactorModel m;
  m.psi = (Eigen::VectorXd::Ones(Lambda.rows()) -
           Lambda.rowwise().squaredNorm())
              .eval();
  m.Lambda = std::move(Lambda);
  return m;
}

}  // namespace

FactorModel model_a() {
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(6, 2);
  L(0, 0) = 0.95;
  L(1, 0) = 0.90;
  L(2, 0) = 0.85;
  L(3, 1) = 0.80;
  L(4, 1) = 0.75;
  L(5, 1) = 0.70;
  return with_unit_diagonal_psi(std::move(L));
}

FactorModel model_b() {
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(1000, 4);
  const double values[4] = {0.95, 0.90, 0.85, 0.80};
  for (int block = 0; block < 4; ++block)
    L.block(250 * block, block, 250, 1).setConstant(values[block]);
  return with_unit_diagonal_psi(std::move(L));
}

FactorModel pss_model() {
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(8, 2);
  L.block(0, 0, 4, 1).setConstant(0.82);
  L.block(4, 1, 4, 1).setConstant(0.82);
  FactorModel m;
  m.Lambda = std::move(L);
  m.psi = Eigen::VectorXd::Constant(8, 0.32);
  return m;
}

Eigen::MatrixXd generate(const FactorModel& model, int N,
                         std::uint64_t seed) {
  model.validate();
  const int p = model.p();
  const int m = model.m();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd sd = model.psi.cwiseSqrt();
  Eigen::MatrixXd X(N, p);
  Eigen::VectorXd z(m);
  for (int n = 0; n < N; ++n) {
    for (int j = 0; j < m; ++j) z(j) = gauss(rng);
    Eigen::VectorXd x = model.Lambda * z;
    for (int i = 0; i < p; ++i) x(i) += sd(i) * gauss(rng);
    X.row(n) = x;
  }
  return X;
}

namespace {

double column_score(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth,
                    const std::vector<int>& perm) {
  double s = 0.0;
  for (int j = 0; j < truth.cols(); ++j)
    s += std::abs(est.col(perm[j]).dot(truth.col(j)));
  return s;
}

}  // namespace

FactorModel align(const FactorModel& est, const FactorModel& truth,
                  bool* used_greedy) {
  if (est.p() != truth.p() || est.m() != truth.m())
    throw parameter_error("align: dimension mismatch");
  const int m = est.m();
  std::vector<int> best_perm(m);
  std::iota(best_perm.begin(), best_perm.end(), 0);
  if (used_greedy != nullptr) *used_greedy = false;

  if (m <= 8) {
    std::vector<int> perm = best_perm;
    double best = -1.0;
    do {
      double s = column_score(est.Lambda, truth.Lambda, perm);
      if (s > best) {
        best = s;
        best_perm = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    if (used_greedy != nullptr) *used_greedy = true;
    std::vector<bool> taken(m, false);
    for (int j = 0; j < m; ++j) {
      int pick = -1;
      double best = -1.0;
      for (int c = 0; c < m; ++c) {
        if (taken[c]) continue;
        double s = std::abs(est.Lambda.col(c).dot(truth.Lambda.col(j)));
        if (s > best) {
          best = s;
          pick = c;
        }
      }
      best_perm[j] = pick;
      taken[pick] = true;
    }
  }

  FactorModel out;
  out.Lambda.resize(est.p(), m);
  out.psi = est.psi;
  for (int j = 0; j < m; ++j) {
    double dot = est.Lambda.col(best_perm[j]).dot(truth.Lambda.col(j));
    double sign = dot < 0.0 ? -1.0 : 1.0;
    out.Lambda.col(j) = sign * est.Lambda.col(best_perm[j]);
  }
  return out;
}

MetricsAccumulator::MetricsAccumulator(FactorModel truth)
    : truth_(std::move(truth)) {}

void MetricsAccumulator::add(const FactorModel& est) {
  const int p = truth_.p();
  const int m = truth_.m();
  StudyMetrics rep;
  rep.mse_lambda = (truth_.Lambda - est.Lambda).squaredNorm() / double(p * m);
  rep.mse_psi = (truth_.psi - est.psi).squaredNorm() / double(p);
  int true_nonzero = 0, true_zero = 0, tp = 0, tn = 0;
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < m; ++j) {
      if (truth_.Lambda(i, j) != 0.0) {
        ++true_nonzero;
        if (est.Lambda(i, j) != 0.0) ++tp;
      } else {
        ++true_zero;
        if (est.Lambda(i, j) == 0.0) ++tn;
      }
    }
  }
  rep.tpr = true_nonzero > 0 ? double(tp) / true_nonzero : 1.0;
  rep.tnr = true_zero > 0 ? double(tn) / true_zero : 1.0;
  per_rep_.push_back(rep);
}

StudyMetrics MetricsAccumulator::mean() const {
  StudyMetrics m;
  if (per_rep_.empty()) return m;
  for (const auto& r : per_rep_) {
    m.mse_lambda += r.mse_lambda;
    m.mse_psi += r.mse_psi;
    m.tpr += r.tpr;
    m.tnr += r.tnr;
  }
  const double n = double(per_rep_.size());
  m.mse_lambda /= n;
  m.mse_psi /= n;
  m.tpr /= n;
  m.tnr /= n;
  return m;
}

StudyMetrics MetricsAccumulator::standard_error() const {
  StudyMetrics se;
  const int n = static_cast<int>(per_rep_.size());
  if (n < 2) return se;
  StudyMetrics mu = mean();
  for (const auto& r : per_rep_) {
    se.mse_lambda += (r.mse_lambda - mu.mse_lambda) * (r.mse_lambda - mu.mse_lambda);
    se.mse_psi += (r.mse_psi - mu.mse_psi) * (r.mse_psi - mu.mse_psi);
    se.tpr += (r.tpr - mu.tpr) * (r.tpr - mu.tpr);
    se.tnr += (r.tnr - mu.tnr) * (r.tnr - mu.tnr);
  }
  const double denom = double(n - 1) * double(n);
  se.mse_lambda = std::sqrt(se.mse_lambda / denom);
  se.mse_psi = std::sqrt(se.mse_psi / denom);
  se.tpr = std::sqrt(se.tpr / denom);
  se.tnr = std::sqrt(se.tnr / denom);
  return se;
}

std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 over (master, index)
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

const char* criterion_name(Criterion c) {
  switch (c) {
    case Criterion::aic:
      return "aic";
    case Criterion::bic:
      return "bic";
    case Criterion::caic:
      return "caic";
  }
  return "?";
}

struct RepOutcome {
  // [method][criterion] -> aligned estimate; empty on failure
  std::vector<std::vector<std::optional<FactorModel>>> estimates;
  std::vector<bool> method_failed;
};

RepOutcome run_replication(const StudyConfig& config, int rep) {
  RepOutcome out;
  const int nm = static_cast<int>(config.methods.size());
  const int nc = static_cast<int>(config.criteria.size());
  out.estimates.assign(nm, std::vector<std::optional<FactorModel>>(nc));
  out.method_failed.assign(nm, false);

  const std::uint64_t rep_seed = split_seed(config.seed, rep);
  Eigen::MatrixXd data = generate(config.truth, config.N, rep_seed);
  SampleMoments moments = sample_covariance(data);
  const int m = config.truth.m();

  for (int mi = 0; mi < nm; ++mi) {
    const StudyMethod& method = config.methods[mi];
    try {
      FactorModel init = init_loadings(moments, m, config.path_options.solver);
      double rho_K = select_rho_max(moments, init, config.path_options.solver);
      std::vector<double> gammas{std::numeric_limits<double>::infinity()};
      if (method.spec.family != PenaltyFamily::lasso)
        gammas.push_back(method.spec.gamma);
      PathGrid grid = build_grid_explicit(rho_K, config.grid_K,
                                          config.grid_delta, gammas);
      PathResult path =
          fit_path(moments, m, grid, method.spec.family, config.path_options,
                   split_seed(rep_seed, 1000 + mi));
      const int row = path.grid.T() - 1;
      for (int ci = 0; ci < nc; ++ci) {
        int k = select_in_row(path, row, config.criteria[ci]);
        out.estimates[mi][ci] =
            align(path.cells[row][k].fit.model, config.truth);
      }
    } catch (const error&) {
      out.method_failed[mi] = true;
    }
  }
  return out;
}

}  // namespace

StudyReport run_study(const StudyConfig& config) {
  if (config.replications < 1)
    throw parameter_error("run_study: replications must be >= 1");
  if (config.methods.empty())
    throw parameter_error("run_study: no methods configured");

  const int R = config.replications;
  std::vector<RepOutcome> outcomes(R);
  const int threads = std::max(1, config.threads);
  if (threads == 1) {
    for (int r = 0; r < R; ++r) outcomes[r] = run_replication(config, r);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&]() {
        for (int r = next.fetch_add(1); r < R; r = next.fetch_add(1))
          outcomes[r] = run_replication(config, r);
      });
    }
    for (auto& th : pool) th.join();
  }

  StudyReport report;
  report.model_name = config.model_name;
  report.N = config.N;
  report.replications = R;
  report.seed = config.seed;

  const int nm = static_cast<int>(config.methods.size());
  const int nc = static_cast<int>(config.criteria.size());
  for (int mi = 0; mi < nm; ++mi) {
    int failures = 0;
    for (int r = 0; r < R; ++r)
      if (outcomes[r].method_failed[mi]) ++failures;
    for (int ci = 0; ci < nc; ++ci) {
      MetricsAccumulator acc(config.truth);
      for (int r = 0; r < R; ++r) {
        const auto& est = outcomes[r].estimates[mi][ci];
        if (est.has_value()) acc.add(*est);
      }
      StudyRow row;
      row.method = config.methods[mi].name;
      row.criterion = criterion_name(config.criteria[ci]);
      row.metrics = acc.mean();
      row.standard_error = acc.standard_error();
      row.replications_used = acc.count();
      row.failures = failures;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace sparsefactor
