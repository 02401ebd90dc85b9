#include "sparsefactor/rotation.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

namespace sparsefactor {

namespace {

struct CriterionEval {
  double value = 0.0;
  Eigen::MatrixXd gradient;  // dQ/dL
};

CriterionEval eval_varimax(const Eigen::MatrixXd& L) {
  const double p = double(L.rows());
  Eigen::MatrixXd L2 = L.cwiseAbs2();
  Eigen::RowVectorXd colmean = L2.colwise().mean();
  CriterionEval out;
  out.value = -(L2.cwiseAbs2().colwise().mean() -
                colmean.cwiseAbs2())
                   .sum();
  out.gradient =
      (-4.0 / p) * (L.array() * (L2.rowwise() - colmean).array()).matrix();
  return out;
}

CriterionEval eval_l1_smoothed(const Eigen::MatrixXd& L, double eps) {
  Eigen::MatrixXd root = (L.cwiseAbs2().array() + eps * eps).sqrt().matrix();
  CriterionEval out;
  out.value = root.sum();
  out.gradient = L.cwiseQuotient(root);
  return out;
}

// Gradient-projection rotation with step halving (orthogonal case).
struct GpaResult {
  Eigen::MatrixXd T;
  double value = 0.0;
  int iterations = 0;
};

template <typename Eval>
GpaResult gpa(const Eigen::MatrixXd& A, Eigen::MatrixXd T, Eval&& eval,
              int max_iterations) {
  const int m = static_cast<int>(A.cols());
  double alpha = 1.0;
  Eigen::MatrixXd L = A * T;
  CriterionEval cur = eval(L);
  GpaResult result;
  int it = 0;
  for (; it < max_iterations; ++it) {
    Eigen::MatrixXd G = A.transpose() * cur.gradient;  // m x m
    Eigen::MatrixXd M = T.transpose() * G;
    Eigen::MatrixXd Gp = G - T * (0.5 * (M + M.transpose()));
    double s = Gp.norm();
    if (s < 1e-10) break;
    bool accepted = false;
    for (int half = 0; half < 30; ++half) {
      Eigen::MatrixXd X = T - alpha * Gp;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(
          X, Eigen::ComputeThinU | Eigen::ComputeThinV);
      Eigen::MatrixXd Tt = svd.matrixU() * svd.matrixV().transpose();
      Eigen::MatrixXd Lt = A * Tt;
      CriterionEval next = eval(Lt);
      if (next.value < cur.value - 0.5 * s * s * alpha) {
        T = std::move(Tt);
        L = std::move(Lt);
        cur = std::move(next);
        alpha *= 2.0;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  result.T = std::move(T);
  result.value = cur.value;
  result.iterations = it;
  (void)m;
  return result;
}

Eigen::MatrixXd random_orthogonal(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd X(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) X(i, j) = gauss(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
  Eigen::MatrixXd Q = qr.householderQ();
  // fix the sign convention so Q is a deterministic function of X
  Eigen::VectorXd d = qr.matrixQR().diagonal();
  for (int j = 0; j < m; ++j)
    if (d(j) < 0.0) Q.col(j) = -Q.col(j);
  return Q;
}

double unsmoothed_value(const Eigen::MatrixXd& L, RotationCriterion c) {
  if (c == RotationCriterion::l1) return L.cwiseAbs().sum();
  return eval_varimax(L).value;
}

// Sign-fix (largest |entry| per column positive) and sort columns by sum of
// squares descending; the same permutation and signs are applied to T.
void canonicalize(Eigen::MatrixXd& L, Eigen::MatrixXd& T) {
  const int m = static_cast<int>(L.cols());
  for (int j = 0; j < m; ++j) {
    int imax = 0;
    L.col(j).cwiseAbs().maxCoeff(&imax);
    if (L(imax, j) < 0.0) {
      L.col(j) = -L.col(j);
      T.col(j) = -T.col(j);
    }
  }
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd ss = L.colwise().squaredNorm();
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return ss(a) > ss(b); });
  Eigen::MatrixXd Ls(L.rows(), m), Ts(T.rows(), m);
  for (int j = 0; j < m; ++j) {
    Ls.col(j) = L.col(order[j]);
    Ts.col(j) = T.col(order[j]);
  }
  L = std::move(Ls);
  T = std::move(Ts);
}

}  // namespace

FitResult ml_fit(const SampleMoments& moments, int m,
                 const SolverOptions& options) {
  if (m < 1) throw parameter_error("ml_fit: m must be >= 1");
  if (m > moments.p) throw parameter_error("ml_fit: m exceeds dimension");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(moments.S);
  FactorModel init;
  init.Lambda.resize(moments.p, m);
  for (int j = 0; j < m; ++j) {
    const int idx = moments.p - 1 - j;
    double e = std::max(es.eigenvalues()(idx), 0.0);
    init.Lambda.col(j) = std::sqrt(e) * es.eigenvectors().col(idx);
  }
  init.psi = (moments.S.diagonal() - init.Lambda.rowwise().squaredNorm())
                 .cwiseMax(options.psi_floor);
  return fit(moments, m, 0.0, PenaltySpec::lasso(), init, options);
}

RotationResult rotate(const Eigen::MatrixXd& Lambda,
                      RotationCriterion criterion,
                      const RotationOptions& options) {
  const int m = static_cast<int>(Lambda.cols());
  if (m < 1) throw parameter_error("rotate: m must be >= 1");
  RotationResult result;
  if (m == 1) {
    result.Lambda_rotated = Lambda;
    result.T = Eigen::MatrixXd::Identity(1, 1);
    result.criterion_value = unsmoothed_value(Lambda, criterion);
    return result;
  }

  std::mt19937_64 rng(options.seed);
  double best = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd best_T;
  int best_iterations = 0;

  for (int s = 0; s <= options.random_starts; ++s) {
    Eigen::MatrixXd T0 = (s == 0) ? Eigen::MatrixXd::Identity(m, m)
                                  : random_orthogonal(m, rng);
    GpaResult run;
    if (criterion == RotationCriterion::varimax) {
      run = gpa(Lambda, T0, eval_varimax, options.max_iterations);
    } else {
      // annealed smoothing of the nondifferentiable L1 criterion
      Eigen::MatrixXd T = std::move(T0);
      int iters = 0;
      for (double eps : {1e-6, 1e-7, 1e-8, 1e-9}) {
        run = gpa(
            Lambda, T,
            [eps](const Eigen::MatrixXd& L) { return eval_l1_smoothed(L, eps); },
            options.max_iterations);
        T = run.T;
        iters += run.iterations;
      }
      run.iterations = iters;
    }
    double value = unsmoothed_value(Lambda * run.T, criterion);
    if (value < best) {
      best = value;
      best_T = run.T;
      best_iterations = run.iterations;
    }
  }

  result.T = std::move(best_T);
  result.Lambda_rotated = Lambda * result.T;
  canonicalize(result.Lambda_rotated, result.T);
  result.criterion_value = best;
  result.iterations = best_iterations;
  return result;
}

RotationResult two_step(const SampleMoments& moments, int m,
                        RotationCriterion criterion,
                        const SolverOptions& solver_options,
                        const RotationOptions& rotation_options) {
  FitResult ml = ml_fit(moments, m, solver_options);
  return rotate(ml.model.Lambda, criterion, rotation_options);
}

}  // namespace sparsefactor
