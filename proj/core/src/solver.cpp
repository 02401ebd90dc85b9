#include "sparsefactor/solver.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>

namespace sparsefactor {

EStepCache e_step(const FactorModel& model, const SampleMoments& moments) {
  model.validate();
  if (model.p() != moments.p)
    throw parameter_error("model dimension does not match moments");
  const int m = model.m();

  Eigen::MatrixXd W = model.Lambda.array().colwise() / model.psi.array();
  Eigen::MatrixXd M = model.Lambda.transpose() * W;
  M += Eigen::MatrixXd::Identity(m, m);
  M = (0.5 * (M + M.transpose())).eval();
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "E-step Cholesky failed (min psi = " << model.psi.minCoeff() << ")";
    throw numerical_error(msg.str());
  }

  EStepCache cache;
  cache.M = M;
  Eigen::MatrixXd SW = moments.S * W;                 // p x m
  cache.B = llt.solve(SW.transpose());                // m x p
  Eigen::MatrixXd G = W.transpose() * SW;             // m x m
  Eigen::MatrixXd MG = llt.solve(G);                  // M^-1 G
  Eigen::MatrixXd A = llt.solve(MG.transpose());      // M^-1 G^T M^-1
  A += llt.solve(Eigen::MatrixXd::Identity(m, m));
  cache.A = 0.5 * (A + A.transpose());
  Eigen::LLT<Eigen::MatrixXd> acheck(cache.A);
  if (acheck.info() != Eigen::Success)
    throw numerical_error("E-step posterior second moment is not positive definite");
  return cache;
}

double coordinate_update(const Eigen::VectorXd& lambda_row, int j,
                         const Eigen::VectorXd& b_i, const Eigen::MatrixXd& A,
                         double psi_i, double rho, const PenaltySpec& spec) {
  const double a_jj = A(j, j);
  if (!(a_jj > 0.0)) throw parameter_error("coordinate_update: a_jj must be > 0");
  double cross = A.col(j).dot(lambda_row) - a_jj * lambda_row(j);
  double theta_tilde = (b_i(j) - cross) / a_jj;
  if (rho == 0.0) return theta_tilde;
  double rho_star = reparameterize_rho(psi_i * rho / a_jj, spec.gamma);
  return threshold(spec, theta_tilde, rho_star);
}

namespace {

// Scalar coordinate cost of the expected penalized objective, scaled by
// psi_i / a_jj: (1/2)(theta - theta_tilde)^2 + (psi_i/a_jj) rho P(|theta|).
inline double coordinate_cost(double theta, double theta_tilde, double w,
                              const PenaltySpec& spec, double rho) {
  double d = theta - theta_tilde;
  return 0.5 * d * d + w * penalty_value(spec, theta, rho);
}

}  // namespace

FactorModel m_step(const EStepCache& cache, const SampleMoments& moments,
                   const FactorModel& model_in, double rho,
                   const PenaltySpec& spec, const SolverOptions& options,
                   bool* psi_floor_hit) {
  const int p = model_in.p();
  const int m = model_in.m();
  Eigen::MatrixXd Lambda = model_in.Lambda;
  const Eigen::VectorXd& psi = model_in.psi;
  const Eigen::MatrixXd& A = cache.A;

  // Effective threshold parameters are fixed for the whole sweep phase.
  Eigen::MatrixXd rho_star(p, m);
  if (rho > 0.0) {
    const bool calibrated = !std::isinf(spec.gamma);
    for (int j = 0; j < m; ++j) {
      const double a_jj = A(j, j);
      double hint = -1.0;
      for (int i = 0; i < p; ++i) {
        const double raw = psi(i) * rho / a_jj;
        double rs = calibrated
                        ? reparameterize_rho_hint(raw, spec.gamma, hint)
                        : raw;
        rho_star(i, j) = rs;
        hint = rs;
      }
    }
  } else {
    rho_star.setZero();
  }

  for (int sweep = 0; sweep < options.cd_max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < m; ++j) {
        const double a_jj = A(j, j);
        const double old_v = Lambda(i, j);
        double cross = A.col(j).dot(Lambda.row(i)) - a_jj * old_v;
        double theta_tilde = (cache.B(j, i) - cross) / a_jj;
        double cand = (rho > 0.0)
                          ? threshold(spec, theta_tilde, rho_star(i, j))
                          : theta_tilde;
        if (cand != old_v && rho > 0.0) {
          // Accept only steps that do not increase the expected penalized
          // objective, so EM ascent holds exactly for every family.
          const double w = psi(i) / a_jj;
          if (coordinate_cost(cand, theta_tilde, w, spec, rho) >
              coordinate_cost(old_v, theta_tilde, w, spec, rho))
            cand = old_v;
        }
        if (cand != old_v) {
          Lambda(i, j) = cand;
          max_change = std::max(max_change, std::abs(cand - old_v));
        }
      }
    }
    if (max_change <= options.cd_tol) break;
  }

  FactorModel out;
  out.Lambda = std::move(Lambda);
  out.psi.resize(p);
  bool floored = false;
  for (int i = 0; i < p; ++i) {
    Eigen::VectorXd row = out.Lambda.row(i);
    double q = moments.S(i, i) - 2.0 * row.dot(cache.B.col(i)) +
               row.dot(A * row);
    double v = q + options.eta * moments.S(i, i);
    if (v < options.psi_floor) {
      v = options.psi_floor;
      floored = true;
    }
    out.psi(i) = v;
  }
  if (psi_floor_hit != nullptr && floored) *psi_floor_hit = true;
  return out;
}

namespace {

// Lemma-style cleanup: a column with exactly one nonzero loading can be
// folded into the unique variance without changing the covariance, strictly
// improving the penalized objective. Returns true if anything changed.
bool fold_single_entry_columns(FactorModel& model) {
  bool changed = false;
  for (int j = 0; j < model.m(); ++j) {
    int nnz = 0, row = -1;
    for (int i = 0; i < model.p(); ++i) {
      if (model.Lambda(i, j) != 0.0) {
        ++nnz;
        row = i;
      }
    }
    if (nnz == 1) {
      model.psi(row) += model.Lambda(row, j) * model.Lambda(row, j);
      model.Lambda(row, j) = 0.0;
      changed = true;
    }
  }
  return changed;
}

}  // namespace

FitResult fit(const SampleMoments& moments, int m, double rho,
              const PenaltySpec& spec, const FactorModel& init,
              const SolverOptions& options) {
  if (m < 1) throw parameter_error("fit: m must be >= 1");
  if (rho < 0.0) throw parameter_error("fit: rho must be >= 0");
  spec.validate();
  init.validate();
  if (init.p() != moments.p || init.m() != m)
    throw parameter_error("fit: initializer dimensions do not match");
  if ((moments.S.diagonal().array() <= 0.0).any())
    throw invalid_data_error("fit: sample covariance has a zero diagonal entry");

  FitResult result;
  result.model = init;
  result.objective =
      penalized_objective(result.model, moments, spec, rho, options.eta);

  int iter = 0;
  while (iter < options.em_max_iter) {
    EStepCache cache = e_step(result.model, moments);
    FactorModel next = m_step(cache, moments, result.model, rho, spec,
                              options, &result.psi_floor_hit);
    PenalizedObjectiveValue obj =
        penalized_objective(next, moments, spec, rho, options.eta);
    ++iter;
    const double delta = obj.total - result.objective.total;
    if (delta < -1e-8) {
      std::ostringstream msg;
      msg << "EM objective decreased by " << -delta << " at iteration "
          << iter;
      throw ascent_violation_error(msg.str());
    }
    const bool small =
        std::abs(delta) <= options.em_tol * (std::abs(result.objective.total) + 1.0);
    result.model = std::move(next);
    result.objective = obj;
    if (small) {
      if (fold_single_entry_columns(result.model)) {
        result.objective = penalized_objective(result.model, moments, spec,
                                               rho, options.eta);
        continue;  // resume EM from the repaired point
      }
      result.converged = true;
      break;
    }
  }
  result.iterations = iter;
  return result;
}

}  // namespace sparsefactor
