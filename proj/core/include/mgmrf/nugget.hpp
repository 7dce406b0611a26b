#pragma once

#include <string>
#include <vector>

#include "mgmrf/inference.hpp"

namespace mgmrf {

struct NuggetUpdate {
  double tau2 = 0.0;
  bool clamped = false;  // estimate went negative and was set to 0
};

// One weighted moment-matching step: tau2 = sum_j w_j (r_j^2 - V_j) with
// w_j proportional to 1/(tau2_current + V_j), normalized. Each term has mean
// tau2 under the model, so the update is unbiased for any such weights.
NuggetUpdate weighted_nugget_update(const Vec& residuals, const Vec& kriging_variances,
                                    double tau2_current);

struct NuggetOptions {
  double tol = 1e-3;  // relative change in tau2, max over fields
  int max_iters = 50;
  bool leave_one_out = true;  // false: in-sample plug-in residuals (faster, optimistic)
};

struct NuggetState {
  Vec tau2;
  int iteration = 0;
  std::vector<Vec> history;  // history[0] is the initial value; length iteration+1
  bool converged = false;
  bool clamped = false;  // any field hit the zero clamp at any iteration
  bool aborted = false;  // inner fit failed; tau2/history hold the partial run
  std::string diagnostic;
};

// Alternate fitting at the current nugget with re-estimating the nugget from
// kriging residuals, until the relative change falls below tol. Residuals are
// leave-one-out by default, computed from the full posterior by rank-one
// removal of each observation.
NuggetState run_bias_correction(const ObservationSet& obs, const TriangulatedDomain& mesh,
                                const FitConfig& fit_config, const Vec& tau2_init,
                                const NuggetOptions& options);

}  // namespace mgmrf
