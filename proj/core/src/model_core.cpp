#include "sparsefactor/model_core.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace sparsefactor {

SampleMoments SampleMoments::make(Eigen::MatrixXd S, int N) {
  if (S.rows() != S.cols() || S.rows() < 1)
    throw invalid_data_error("covariance matrix must be square");
  if (N < 1) throw invalid_data_error("sample size must be positive");
  if (!S.allFinite())
    throw invalid_data_error("covariance matrix has non-finite entries");
  const double scale = S.cwiseAbs().maxCoeff();
  const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
  if (scale > 0.0 && asym > 1e-12 * scale)
    throw invalid_data_error("covariance matrix is not symmetric");
  Eigen::MatrixXd sym = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym,
                                                    Eigen::EigenvaluesOnly);
  const double max_ev = es.eigenvalues().maxCoeff();
  if (es.eigenvalues().minCoeff() < -1e-10 * std::max(max_ev, 0.0))
    throw invalid_data_error("covariance matrix is not positive semidefinite");
  SampleMoments m;
  m.p = static_cast<int>(sym.rows());
  m.S = std::move(sym);
  m.N = N;
  return m;
}

void FactorModel::validate() const {
  if (Lambda.cols() < 1) throw parameter_error("model needs m >= 1 factors");
  if (Lambda.rows() != psi.size())
    throw parameter_error("Lambda rows and psi length disagree");
  if (!Lambda.allFinite() || !psi.allFinite())
    throw parameter_error("model parameters have non-finite entries");
  if ((psi.array() <= 0.0).any())
    throw parameter_error("unique variances must be strictly positive");
}

SampleMoments sample_covariance(const Eigen::MatrixXd& data) {
  if (!data.allFinite())
    throw invalid_data_error("data matrix has non-finite entries");
  const int N = static_cast<int>(data.rows());
  const int p = static_cast<int>(data.cols());
  if (p < 1) throw invalid_data_error("data matrix has no columns");
  if (N < 2)
    throw insufficient_data_error("need at least 2 observations, got " +
                                  std::to_string(N));
  Eigen::RowVectorXd mean = data.colwise().mean();
  Eigen::MatrixXd centered = data.rowwise() - mean;
  Eigen::MatrixXd S = (centered.transpose() * centered) / double(N);
  S = 0.5 * (S + S.transpose()).eval();
  return SampleMoments::make(std::move(S), N);
}

namespace {

// Woodbury workspace: M = I + Lambda^T Psi^-1 Lambda and its Cholesky.
struct Woodbury {
  Eigen::MatrixXd W;  // Psi^-1 Lambda, p x m
  Eigen::MatrixXd M;  // m x m
  Eigen::LLT<Eigen::MatrixXd> llt;
};

Woodbury make_woodbury(const FactorModel& model) {
  Woodbury wb;
  wb.W = model.Lambda.array().colwise() / model.psi.array();
  wb.M = model.Lambda.transpose() * wb.W;
  wb.M += Eigen::MatrixXd::Identity(model.m(), model.m());
  wb.M = (0.5 * (wb.M + wb.M.transpose())).eval();
  wb.llt.compute(wb.M);
  if (wb.llt.info() != Eigen::Success)
    throw singular_model_error("Cholesky of Lambda^T Psi^-1 Lambda + I failed");
  return wb;
}

void check_conditioning(const FactorModel& model) {
  // sigma_min(Sigma) >= min psi; sigma_max(Sigma) <= |Lambda|_F^2 + max psi.
  const double upper = model.Lambda.squaredNorm() + model.psi.maxCoeff();
  const double lower = model.psi.minCoeff();
  if (!(lower > 0.0) || upper / lower > 1e14) {
    std::ostringstream msg;
    msg << "implied covariance is numerically singular (condition estimate "
        << (lower > 0.0 ? upper / lower
                        : std::numeric_limits<double>::infinity())
        << ")";
    throw singular_model_error(msg.str());
  }
}

// Sigma^-1 X without forming Sigma.
Eigen::MatrixXd sigma_inv_apply(const FactorModel& model, const Woodbury& wb,
                                const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Y = X.array().colwise() / model.psi.array();
  Eigen::MatrixXd t = wb.llt.solve(model.Lambda.transpose() * Y);
  return Y - wb.W * t;
}

}  // namespace

double log_likelihood(const FactorModel& model, const SampleMoments& moments) {
  model.validate();
  if (model.p() != moments.p)
    throw parameter_error("model dimension does not match moments");
  check_conditioning(model);
  Woodbury wb = make_woodbury(model);

  double logdet = model.psi.array().log().sum();
  logdet += 2.0 * wb.llt.matrixL().toDenseMatrix().diagonal().array().log().sum();

  // tr(Sigma^-1 S) = sum s_ii / psi_i - tr(M^-1 W^T S W)
  const double tr_diag =
      (moments.S.diagonal().array() / model.psi.array()).sum();
  Eigen::MatrixXd G = wb.W.transpose() * moments.S * wb.W;
  const double tr_corr = wb.llt.solve(G).trace();
  const double trace = tr_diag - tr_corr;

  const double p = moments.p;
  return -0.5 * moments.N *
         (p * std::log(2.0 * M_PI) + logdet + trace);
}

Eigen::MatrixXd loading_gradient(const FactorModel& model,
                                 const SampleMoments& moments) {
  model.validate();
  if (model.p() != moments.p)
    throw parameter_error("model dimension does not match moments");
  check_conditioning(model);
  Woodbury wb = make_woodbury(model);

  Eigen::MatrixXd U = sigma_inv_apply(model, wb, model.Lambda);  // p x m
  // (S - Sigma) U = S U - Lambda (Lambda^T U) - Psi U
  Eigen::MatrixXd V = moments.S * U - model.Lambda * (model.Lambda.transpose() * U);
  V -= (U.array().colwise() * model.psi.array()).matrix();
  return moments.N * sigma_inv_apply(model, wb, V);
}

PenalizedObjectiveValue penalized_objective(const FactorModel& model,
                                            const SampleMoments& moments,
                                            const PenaltySpec& spec,
                                            double rho, double eta) {
  if (rho < 0.0) throw parameter_error("rho must be >= 0");
  if (eta < 0.0) throw parameter_error("eta must be >= 0");
  PenalizedObjectiveValue v;
  v.loglik = log_likelihood(model, moments);
  double pen = 0.0;
  if (rho > 0.0) {
    for (int i = 0; i < model.p(); ++i)
      for (int j = 0; j < model.m(); ++j)
        pen += penalty_value(spec, model.Lambda(i, j), rho);
  }
  v.penalty = moments.N * pen;
  v.eta_term = 0.5 * moments.N * eta *
               (moments.S.diagonal().array() / model.psi.array()).sum();
  v.total = v.loglik - v.penalty - v.eta_term;
  return v;
}

Eigen::VectorXd posterior_scores(const FactorModel& model,
                                 const Eigen::VectorXd& x) {
  model.validate();
  if (x.size() != model.p())
    throw parameter_error("observation length does not match model");
  if (!x.allFinite())
    throw invalid_data_error("observation has non-finite entries");
  Woodbury wb = make_woodbury(model);
  return wb.llt.solve(wb.W.transpose() * x);
}

}  // namespace sparsefactor
