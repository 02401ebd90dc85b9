#include "sparsefactor/selection.hpp"

#include <cmath>

#include "sparsefactor/path.hpp"

namespace sparsefactor {

int degrees_of_freedom(const FactorModel& model) {
  int count = 0;
  for (int i = 0; i < model.p(); ++i)
    for (int j = 0; j < model.m(); ++j)
      if (model.Lambda(i, j) != 0.0) ++count;
  return count;
}

CriterionSet criteria(double loglik, int df, int N, int p) {
  if (N < 2) throw parameter_error("criteria: N must be >= 2");
  CriterionSet c;
  c.df = df;
  const double k = df + p;
  const double logN = std::log(double(N));
  c.aic = -2.0 * loglik + 2.0 * k;
  c.bic = -2.0 * loglik + logN * k;
  c.caic = -2.0 * loglik + (logN + 1.0) * k;
  return c;
}

double criterion_value(const CriterionSet& c, Criterion criterion) {
  switch (criterion) {
    case Criterion::aic:
      return c.aic;
    case Criterion::bic:
      return c.bic;
    case Criterion::caic:
      return c.caic;
  }
  throw parameter_error("unknown criterion");
}

std::pair<int, int> select(const PathResult& path, Criterion criterion) {
  if (path.cells.empty() || path.cells.front().empty())
    throw parameter_error("select: empty path");
  std::pair<int, int> best{0, 0};
  double best_value = std::numeric_limits<double>::infinity();
  // k outer, t inner: ties keep the first hit, i.e. larger rho then larger
  // gamma.
  for (int k = 0; k < path.grid.K(); ++k) {
    for (int t = 0; t < path.grid.T(); ++t) {
      double v = criterion_value(path.cells[t][k].criteria, criterion);
      if (v < best_value) {
        best_value = v;
        best = {t, k};
      }
    }
  }
  return best;
}

int select_in_row(const PathResult& path, int t, Criterion criterion) {
  if (t < 0 || t >= path.grid.T())
    throw parameter_error("select_in_row: bad row index");
  int best_k = 0;
  double best_value = std::numeric_limits<double>::infinity();
  for (int k = 0; k < path.grid.K(); ++k) {
    double v = criterion_value(path.cells[t][k].criteria, criterion);
    if (v < best_value) {
      best_value = v;
      best_k = k;
    }
  }
  return best_k;
}

}  // namespace sparsefactor
