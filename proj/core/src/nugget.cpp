#include "mgmrf/nugget.hpp"

#include <cmath>
#include <limits>

#include "mgmrf/errors.hpp"
#include "mgmrf/precision.hpp"

namespace mgmrf {

NuggetUpdate weighted_nugget_update(const Vec& residuals, const Vec& kriging_variances,
                                    double tau2_current) {
  const int n = static_cast<int>(residuals.size());
  if (kriging_variances.size() != n)
    throw config_error("nugget update: residuals and variances differ in length");
  if (n < 2) throw config_error("nugget update: needs at least 2 points");
  if (!(tau2_current >= 0.0)) throw config_error("nugget update: current tau2 must be >= 0");

  double wsum = 0.0, est = 0.0;
  for (int j = 0; j < n; ++j) {
    if (kriging_variances[j] < 0.0)
      throw config_error("nugget update: kriging variances must be >= 0");
    const double w = 1.0 / (tau2_current + kriging_variances[j]);
    wsum += w;
    est += w * (residuals[j] * residuals[j] - kriging_variances[j]);
  }
  if (!(wsum > 0.0) || !std::isfinite(wsum))
    throw numeric_error("nugget update: degenerate weights (tau2 and variances all zero?)");
  est /= wsum;

  NuggetUpdate out;
  out.clamped = est < 0.0;
  out.tau2 = out.clamped ? 0.0 : est;
  return out;
}

namespace {

// Floor applied to a clamped-to-zero tau2 before it re-enters a fit, where a
// zero observation variance would be singular. The recorded trajectory keeps
// the exact 0.
constexpr double kTau2Floor = 1e-10;

struct ResidualSet {
  std::vector<std::vector<double>> residual;  // per field
  std::vector<std::vector<double>> variance;
};

ResidualSet kriging_residuals(const ConditionedGmrf& cond, const ObservationSet& obs,
                              bool leave_one_out) {
  const int t = obs.size();
  ResidualSet out;
  out.residual.resize(obs.field_count);
  out.variance.resize(obs.field_count);

  const Vec fitted = obs.a * cond.mean;
  const Eigen::SparseMatrix<double, Eigen::RowMajor> a_rows(obs.a);
  for (int j = 0; j < t; ++j) {
    Vec aj = Vec::Zero(obs.a.cols());
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(a_rows, j); it; ++it)
      aj[it.index()] = it.value();
    const double dj = aj.dot(cond.factor->solve(aj));
    double resid, var;
    if (leave_one_out) {
      // Remove observation j from the posterior by a rank-one identity:
      // with c = 1/tau2 and d = a_j' Q_c^{-1} a_j,
      //   y_hat_{-j} = (m_j - c d y_j) / (1 - c d),  V_{-j} = d / (1 - c d).
      // 1 - c d is positive whenever the prior precision is; clamp against
      // roundoff at very small nuggets.
      const double c = obs.q_n_diag[j];
      const double denom = std::max(1.0 - c * dj, 1e-12);
      const double loo_mean = (fitted[j] - c * dj * obs.value[j]) / denom;
      resid = obs.value[j] - loo_mean;
      var = dj / denom;
    } else {
      resid = obs.value[j] - fitted[j];
      var = dj;
    }
    out.residual[obs.field_of[j]].push_back(resid);
    out.variance[obs.field_of[j]].push_back(var);
  }
  return out;
}

}  // namespace

NuggetState run_bias_correction(const ObservationSet& obs, const TriangulatedDomain& mesh,
                                const FitConfig& fit_config, const Vec& tau2_init,
                                const NuggetOptions& options) {
  if (tau2_init.size() != obs.field_count)
    throw config_error("bias correction: one initial tau2 per field required");
  for (int i = 0; i < obs.field_count; ++i)
    if (!(tau2_init[i] > 0.0))
      throw config_error("bias correction: initial tau2 must be positive");
  if (options.max_iters < 1) throw config_error("bias correction: max_iters must be >= 1");

  const FemMatrices fem = assemble_fem(mesh);

  NuggetState state;
  state.tau2 = tau2_init;
  state.history.push_back(tau2_init);

  FitConfig config = fit_config;
  for (int iter = 1; iter <= options.max_iters; ++iter) {
    Vec tau2_fit = state.tau2;
    for (int f = 0; f < obs.field_count; ++f)
      tau2_fit[f] = std::max(tau2_fit[f], kTau2Floor);
    const ObservationSet obs_cur = with_nugget(obs, tau2_fit);

    FitResult fitted;
    try {
      fitted = fit(config, fem, obs_cur);
    } catch (const std::runtime_error& e) {
      state.aborted = true;
      state.diagnostic = e.what();
      return state;
    }
    // Later iterations restart the optimizer from the previous mode only;
    // the surface moves little between nugget updates.
    config.base = fitted.estimate;
    config.optimizer.n_starts = 1;

    const MultivariateGmrf gmrf = build_precision(fitted.estimate, fem);
    const ConditionedGmrf cond = condition(gmrf, obs_cur);
    const ResidualSet rs = kriging_residuals(cond, obs_cur, options.leave_one_out);

    Vec tau2_new(obs.field_count);
    double max_rel = 0.0;
    for (int f = 0; f < obs.field_count; ++f) {
      const Vec r = Eigen::Map<const Vec>(rs.residual[f].data(), rs.residual[f].size());
      const Vec v = Eigen::Map<const Vec>(rs.variance[f].data(), rs.variance[f].size());
      const NuggetUpdate u = weighted_nugget_update(r, v, state.tau2[f]);
      tau2_new[f] = u.tau2;
      state.clamped = state.clamped || u.clamped;
      max_rel = std::max(max_rel,
                         std::abs(tau2_new[f] - state.tau2[f]) / std::max(state.tau2[f], 1e-12));
    }

    state.tau2 = tau2_new;
    state.iteration = iter;
    state.history.push_back(tau2_new);
    if (max_rel < options.tol) {
      state.converged = true;
      break;
    }
  }
  return state;
}

}  // namespace mgmrf
