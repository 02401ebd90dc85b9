#pragma once

#include <utility>

#include "sparsefactor/types.hpp"

namespace sparsefactor {

struct PathResult;  // path.hpp

enum class Criterion { aic, bic, caic };

struct CriterionSet {
  double aic = 0.0;
  double bic = 0.0;
  double caic = 0.0;
  int df = 0;
};

/// Exact count of nonzero loadings (bit-exact zeros; no tolerance).
int degrees_of_freedom(const FactorModel& model);

/// AIC  = -2 loglik + 2 (df + p)
/// BIC  = -2 loglik + log(N) (df + p)
/// CAIC = -2 loglik + (log(N) + 1) (df + p)
CriterionSet criteria(double loglik, int df, int N, int p);

/// Argmin cell (t, k) of the chosen criterion; ties break toward larger rho
/// (sparser), then larger gamma (more convex).
std::pair<int, int> select(const PathResult& path, Criterion criterion);

/// Same, restricted to one gamma row (used when a study fixes gamma).
int select_in_row(const PathResult& path, int t, Criterion criterion);

double criterion_value(const CriterionSet& c, Criterion criterion);

}  // namespace sparsefactor
