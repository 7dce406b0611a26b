#pragma once

#include <array>
#include <string>
#include <vector>

#include "mgmrf/fem.hpp"
#include "mgmrf/gmrf.hpp"
#include "mgmrf/optimize.hpp"
#include "mgmrf/spde_spec.hpp"

namespace mgmrf {

// What is estimated and how. `base` supplies every fixed value and the
// initial value of every free entry; free kappa entries are optimized on the
// log scale, free b entries raw. Noise kappas can be tied to the matching
// diagonal kappa, the usual identifiable setup.
struct FitConfig {
  SpdeSystemSpec base;
  std::vector<std::array<int, 2>> free_kappa;
  std::vector<std::array<int, 2>> free_b;
  bool tie_noise_kappa = true;
  double prior_kappa_log_sd = 10.0;  // log-normal(0, sd^2) on each free kappa
  double prior_b_sd = 10.0;          // normal(0, sd^2) on each free b
  OptimizerOptions optimizer;

  int n_free() const { return static_cast<int>(free_kappa.size() + free_b.size()); }
  void validate() const;
};

// pack: log kappa entries first, then b entries. unpack(pack(s)) == s on the
// free entries; fixed entries always come from config.base.
Vec pack_parameters(const FitConfig& config, const SpdeSystemSpec& spec);
SpdeSystemSpec unpack_parameters(const FitConfig& config, const Vec& packed);

double log_prior(const FitConfig& config, const Vec& packed);

// log pi(theta | y) up to an additive constant:
//   log pi(theta) + 1/2 log|Q| - 1/2 log|Q_c| + 1/2 mu_c^T Q_c mu_c.
// A factorization failure makes `ok` false and value -infinity; optimizers
// treat such points as rejected.
struct LogPosterior {
  double value = 0.0;
  double log_prior = 0.0;
  double half_logdet_prior = 0.0;
  double half_logdet_posterior = 0.0;
  double half_quadratic = 0.0;
  bool ok = true;
  std::string diagnostic;
};

LogPosterior log_posterior(const FitConfig& config, const FemMatrices& fem,
                           const ObservationSet& obs, const Vec& packed);

struct FitResult {
  SpdeSystemSpec estimate;
  Vec packed_mode;
  Vec packed_sd;                  // curvature std devs in packed coordinates
  std::vector<double> kappa_sd;   // natural scale, aligned with config.free_kappa
  std::vector<double> b_sd;       // aligned with config.free_b
  double log_posterior = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
  bool sd_reliable = true;
  std::vector<double> ascent;  // accepted log-posterior values, nondecreasing
};

// Multi-start quasi-Newton maximization of the log posterior; std devs from
// the finite-difference curvature at the best mode, delta-mapped for kappas.
// Rows of b with a negative free diagonal are sign-flipped afterwards, which
// leaves the distribution unchanged.
FitResult fit(const FitConfig& config, const FemMatrices& fem, const ObservationSet& obs);

struct PredictionResult {
  Vec predicted;
  std::vector<int> field_of;
  std::vector<double> relative_error;  // per field, ||y_hat - y|| / ||y_hat||
};

// A_target mu_c at held-out locations; every target must be inside the mesh.
PredictionResult predict(const ConditionedGmrf& posterior, const TriangulatedDomain& mesh,
                         const std::vector<double>& x, const std::vector<double>& y,
                         const std::vector<int>& field_of, const Vec& value);

// Same observation geometry with different per-field nugget variances.
ObservationSet with_nugget(const ObservationSet& obs, const Vec& nugget_variance);

}  // namespace mgmrf
