#pragma once

#include <array>
#include <vector>

#include "mgmrf/gmrf.hpp"
#include "mgmrf/types.hpp"

namespace mgmrf {

/* Matern correlation
 *   M(h | nu, a) = 2^(1-nu) / Gamma(nu) * (a h)^nu * K_nu(a h),  M(0) = 1
 * with K_nu the modified Bessel function of the second kind. nu = 1/2 gives
 * exp(-a h); the effective range sqrt(8 nu)/a is where M drops to ~0.13.
 */
double matern_correlation(double h, double nu, double a);
double effective_range(double nu, double a);

// Dense multivariate Matern model. Diagonal blocks use (nu[i][i], a[i][i]),
// cross blocks scale by rho[i][j] * sigma[i] * sigma[j].
struct MaternCrossCovariance {
  int field_count = 0;
  Vec sigma;  // standard deviations
  Mat nu;
  Mat a;
  Mat rho;  // diag = 1
};

// Common scale and averaged cross-smoothness nu_ij = (nu_i + nu_j)/2, the
// standard sufficient recipe for a valid model.
MaternCrossCovariance parsimonious_matern(const Vec& sigma, const Vec& nu_diag, double a,
                                          const Mat& rho);

// Covariance of the vector (field_of[r] at locations[r])_r. With
// check_validity the assembled matrix must factor, otherwise an invalid-model
// error is thrown.
Mat assemble_covariance(const MaternCrossCovariance& model,
                        const std::vector<std::array<double, 2>>& locations,
                        const std::vector<int>& field_of, bool check_validity = true);

struct KrigeResult {
  Vec mean;
  Vec variance;
};

// Conditional mean and variance at targets given nugget-noised observations.
KrigeResult dense_krige(const MaternCrossCovariance& model, const ObservationSet& obs,
                        const std::vector<std::array<double, 2>>& target_locations,
                        const std::vector<int>& target_fields);

// Gaussian log likelihood of the observations under model + nugget.
double matern_log_likelihood(const MaternCrossCovariance& model, const ObservationSet& obs);

}  // namespace mgmrf
