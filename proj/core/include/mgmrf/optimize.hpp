#pragma once

#include <functional>
#include <vector>

#include "mgmrf/types.hpp"

namespace mgmrf {

using Objective = std::function<double(const Vec&)>;

struct OptimizerOptions {
  int max_iters = 500;
  double grad_tol = 1e-5;    // infinity norm of the gradient
  double fd_step = 1e-5;     // scaled per coordinate as h*(1 + |x_i|)
  double hess_step = 1e-3;   // wider stencil for second differences
  int n_starts = 3;
};

struct OptimizeResult {
  Vec x;
  double f = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
  std::vector<double> trace;  // accepted objective values, nonincreasing
};

// Central finite differences, coordinate step h*(1 + |x_i|).
Vec central_gradient(const Objective& f, const Vec& x, double h);
Mat central_hessian(const Objective& f, const Vec& x, double h);

// BFGS with backtracking Armijo line search. Minimizes f; infinite or NaN
// objective values are treated as out-of-domain and rejected by the search.
OptimizeResult minimize_bfgs(const Objective& f, const Vec& x0, const OptimizerOptions& opts);

}  // namespace mgmrf
