#pragma once

#include "mgmrf/spde_spec.hpp"
#include "mgmrf/types.hpp"

namespace mgmrf {

// b * (kappa^2 + |k|^2)^(alpha/2), the Fourier symbol of one operator entry.
double operator_symbol(double b, double kappa, int alpha, double k_norm);

// Spectral density of one driving noise field, unit noise variance:
// (2 pi)^-d * (kappa_n^2 + |k|^2)^-alpha_n. alpha_n = 0 is flat (white noise).
double noise_spectrum(int noise_alpha, double noise_kappa, int d, double k_norm);

// Power spectral matrix of a bivariate system at frequency k, from the closed
// forms for S = H^-1 S_f H^-H with real symbols. Symmetric PSD at every k.
Eigen::Matrix2d power_spectrum_full(const SpdeSystemSpec& spec, double kx, double ky);

// Same matrix on the lower-triangular subfamily (b12 = 0), radial in |k|.
Eigen::Matrix2d power_spectrum_triangular(const SpdeSystemSpec& spec, double k_norm);

// Spectral density of a Matern covariance with variance sigma2, smoothness nu,
// scale a, in dimension d.
double matern_spectrum(double sigma2, double nu, double a, int d, double k_norm);

struct MatchedMaternParams {
  double sigma1 = 0.0;  // marginal standard deviations
  double sigma2 = 0.0;
  double rho12 = 0.0;  // co-located cross-correlation
  double nu11 = 0.0, nu12 = 0.0, nu22 = 0.0;
  double a = 0.0;  // common inverse range scale
};

// Matern parameters whose cross-covariance model reproduces the system's
// spectra in the equal-kappa regime (field 1 exactly, field 2 up to the
// documented branch approximation). Requires a triangular bivariate spec with
// every active kappa equal.
MatchedMaternParams match_parameters(const SpdeSystemSpec& spec);

}  // namespace mgmrf
