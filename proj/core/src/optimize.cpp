#include "mgmrf/optimize.hpp"

#include <cmath>
#include <limits>

#include "mgmrf/errors.hpp"

namespace mgmrf {

Vec central_gradient(const Objective& f, const Vec& x, double h) {
  const int n = static_cast<int>(x.size());
  Vec g(n), xp = x, xm = x;
  for (int i = 0; i < n; ++i) {
    const double hi = h * (1.0 + std::abs(x[i]));
    xp[i] = x[i] + hi;
    xm[i] = x[i] - hi;
    g[i] = (f(xp) - f(xm)) / (2.0 * hi);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return g;
}

Mat central_hessian(const Objective& f, const Vec& x, double h) {
  const int n = static_cast<int>(x.size());
  Mat hess(n, n);
  const double f0 = f(x);
  Vec step(n);
  for (int i = 0; i < n; ++i) step[i] = h * (1.0 + std::abs(x[i]));

  Vec xt = x;
  for (int i = 0; i < n; ++i) {
    xt[i] = x[i] + step[i];
    const double fp = f(xt);
    xt[i] = x[i] - step[i];
    const double fm = f(xt);
    xt[i] = x[i];
    hess(i, i) = (fp - 2.0 * f0 + fm) / (step[i] * step[i]);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double v = 0.0;
      for (int si : {1, -1}) {
        for (int sj : {1, -1}) {
          xt[i] = x[i] + si * step[i];
          xt[j] = x[j] + sj * step[j];
          v += si * sj * f(xt);
          xt[i] = x[i];
          xt[j] = x[j];
        }
      }
      hess(i, j) = hess(j, i) = v / (4.0 * step[i] * step[j]);
    }
  }
  return hess;
}

OptimizeResult minimize_bfgs(const Objective& f, const Vec& x0, const OptimizerOptions& opts) {
  const int n = static_cast<int>(x0.size());
  const double inf = std::numeric_limits<double>::infinity();

  OptimizeResult res;
  res.x = x0;
  res.f = f(x0);
  if (!std::isfinite(res.f))
    throw numeric_error("minimize_bfgs: objective is not finite at the starting point");
  res.trace.push_back(res.f);

  Mat h_inv = Mat::Identity(n, n);
  Vec g = central_gradient(f, res.x, opts.fd_step);
  res.grad_norm = g.lpNorm<Eigen::Infinity>();

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    res.iterations = iter;
    if (res.grad_norm <= opts.grad_tol) {
      res.converged = true;
      return res;
    }

    Vec d = -h_inv * g;
    if (!(d.dot(g) < 0.0)) {  // stale curvature, fall back to steepest descent
      h_inv.setIdentity();
      d = -g;
    }

    // Armijo backtracking; non-finite trial values shrink the step too.
    const double slope = g.dot(d);
    const double c1 = 1e-4;
    double t = 1.0;
    double f_new = inf;
    Vec x_new;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      x_new = res.x + t * d;
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new <= res.f + c1 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      res.converged = res.grad_norm <= 10.0 * opts.grad_tol;
      return res;  // no further progress possible at this scale
    }

    Vec g_new = central_gradient(f, x_new, opts.fd_step);
    Vec s = x_new - res.x;
    Vec y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      // Sherman-Morrison form of the inverse BFGS update.
      const double rho = 1.0 / sy;
      Mat i_mat = Mat::Identity(n, n);
      h_inv = (i_mat - rho * s * y.transpose()) * h_inv * (i_mat - rho * y * s.transpose()) +
              rho * s * s.transpose();
    }

    res.x = x_new;
    res.f = f_new;
    res.trace.push_back(f_new);
    g = g_new;
    res.grad_norm = g.lpNorm<Eigen::Infinity>();
  }
  res.iterations = opts.max_iters;
  res.converged = res.grad_norm <= opts.grad_tol;
  return res;
}

}  // namespace mgmrf
