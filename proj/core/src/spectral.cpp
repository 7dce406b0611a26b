#include "mgmrf/spectral.hpp"

#include <cmath>
#include <string>

#include "mgmrf/errors.hpp"

namespace mgmrf {

double operator_symbol(double b, double kappa, int alpha, double k_norm) {
  if (alpha == 0) return b;
  return b * std::pow(kappa * kappa + k_norm * k_norm, alpha / 2.0);
}

double noise_spectrum(int noise_alpha, double noise_kappa, int d, double k_norm) {
  const double flat = std::pow(2.0 * M_PI, -d);
  if (noise_alpha == 0) return flat;
  return flat * std::pow(noise_kappa * noise_kappa + k_norm * k_norm, -noise_alpha);
}

namespace {

void require_bivariate(const SpdeSystemSpec& spec) {
  if (spec.field_count != 2)
    throw config_error("spectral: closed forms require a bivariate system");
}

}  // namespace

Eigen::Matrix2d power_spectrum_full(const SpdeSystemSpec& spec, double kx, double ky) {
  require_bivariate(spec);
  const double kn = std::sqrt(kx * kx + ky * ky);
  const double h11 = operator_symbol(spec.b(0, 0), spec.kappa(0, 0), spec.alpha(0, 0), kn);
  const double h12 = operator_symbol(spec.b(0, 1), spec.kappa(0, 1), spec.alpha(0, 1), kn);
  const double h21 = operator_symbol(spec.b(1, 0), spec.kappa(1, 0), spec.alpha(1, 0), kn);
  const double h22 = operator_symbol(spec.b(1, 1), spec.kappa(1, 1), spec.alpha(1, 1), kn);
  const double det = h11 * h22 - h12 * h21;
  if (std::abs(det) < 1e-300)
    throw numeric_error("power_spectrum_full: singular symbol, det = " + std::to_string(det));
  const double sf1 = noise_spectrum(spec.noise_alpha[0], spec.noise_kappa[0], 2, kn);
  const double sf2 = noise_spectrum(spec.noise_alpha[1], spec.noise_kappa[1], 2, kn);
  const double det2 = det * det;

  Eigen::Matrix2d s;
  s(0, 0) = (h22 * h22 * sf1 + h12 * h12 * sf2) / det2;
  s(1, 1) = (h21 * h21 * sf1 + h11 * h11 * sf2) / det2;
  s(0, 1) = s(1, 0) = -(h22 * h21 * sf1 + h12 * h11 * sf2) / det2;
  return s;
}

Eigen::Matrix2d power_spectrum_triangular(const SpdeSystemSpec& spec, double k_norm) {
  require_bivariate(spec);
  if (spec.b(0, 1) != 0.0)
    throw config_error("power_spectrum_triangular: system is not triangular (b12 != 0)");
  const double h11 = operator_symbol(spec.b(0, 0), spec.kappa(0, 0), spec.alpha(0, 0), k_norm);
  const double h21 = operator_symbol(spec.b(1, 0), spec.kappa(1, 0), spec.alpha(1, 0), k_norm);
  const double h22 = operator_symbol(spec.b(1, 1), spec.kappa(1, 1), spec.alpha(1, 1), k_norm);
  const double sf1 = noise_spectrum(spec.noise_alpha[0], spec.noise_kappa[0], 2, k_norm);
  const double sf2 = noise_spectrum(spec.noise_alpha[1], spec.noise_kappa[1], 2, k_norm);

  Eigen::Matrix2d s;
  s(0, 0) = sf1 / (h11 * h11);
  s(0, 1) = s(1, 0) = -sf1 * h21 / (h22 * h11 * h11);
  s(1, 1) = (h21 * h21 * sf1 + h11 * h11 * sf2) / (h11 * h11 * h22 * h22);
  return s;
}

double matern_spectrum(double sigma2, double nu, double a, int d, double k_norm) {
  if (!(sigma2 > 0.0) || !(nu > 0.0) || !(a > 0.0))
    throw config_error("matern_spectrum: sigma2, nu, a must be positive");
  const double num = std::pow(2.0 * M_PI, -d) * std::pow(a, 2.0 * nu) *
                     std::pow(4.0 * M_PI, d / 2.0) * sigma2 * std::tgamma(nu + d / 2.0);
  const double den =
      std::pow(a * a + k_norm * k_norm, nu + d / 2.0) * std::tgamma(nu);
  return num / den;
}

MatchedMaternParams match_parameters(const SpdeSystemSpec& spec) {
  require_bivariate(spec);
  if (spec.b(0, 1) != 0.0)
    throw config_error("match_parameters: system must be triangular (b12 = 0)");

  const double a = spec.kappa(0, 0);
  auto same = [a](double k) { return std::abs(k - a) <= 1e-12 * std::max(1.0, std::abs(a)); };
  // Every kappa that enters the spectra must share the common scale. A kappa
  // attached to white noise or to a zero coefficient never enters.
  if (!same(spec.kappa(1, 1)) || (spec.b(1, 0) != 0.0 && !same(spec.kappa(1, 0))))
    throw config_error("match_parameters: matching requires all kappa equal");
  for (int i = 0; i < 2; ++i)
    if (spec.noise_alpha[i] > 0 && !same(spec.noise_kappa[i]))
      throw config_error("match_parameters: matching requires noise kappa equal to kappa");

  const double d = 2.0;
  const double a11 = spec.alpha(0, 0), a21 = spec.alpha(1, 0), a22 = spec.alpha(1, 1);
  const double an1 = spec.noise_alpha[0], an2 = spec.noise_alpha[1];

  MatchedMaternParams m;
  m.a = a;
  m.nu11 = a11 + an1 - d / 2.0;
  m.nu12 = a11 + a22 / 2.0 + an1 - a21 / 2.0 - d / 2.0;
  // Two branch formulas for nu22; they coincide when a21 + an2 = a11 + an1.
  m.nu22 = (a21 + an2 <= a11 + an1) ? an2 + a22 - d / 2.0 : a11 + a22 + an1 - a21 - d / 2.0;
  if (!(m.nu11 > 0.0) || !(m.nu12 > 0.0) || !(m.nu22 > 0.0))
    throw config_error("match_parameters: matched smoothness must be positive");

  auto coeff = [&](double nu) {
    return std::pow(4.0 * M_PI, d / 2.0) * std::pow(a, 2.0 * nu) *
           std::tgamma(nu + d / 2.0) / std::tgamma(nu);
  };
  const double b11 = spec.b(0, 0), b21 = spec.b(1, 0), b22 = spec.b(1, 1);
  const double sigma11 = 1.0 / (b11 * b11 * coeff(m.nu11));
  const double cross = -b21 / (b22 * b11 * b11 * coeff(m.nu12));
  const double sigma22 = (b21 * b21 + b11 * b11) / (b11 * b11 * b22 * b22 * coeff(m.nu22));

  m.sigma1 = std::sqrt(sigma11);
  m.sigma2 = std::sqrt(sigma22);
  m.rho12 = cross / (m.sigma1 * m.sigma2);
  if (std::abs(m.rho12) > 1.0)
    throw numeric_error("match_parameters: inconsistent parameters, |rho12| = " +
                        std::to_string(std::abs(m.rho12)) + " > 1");
  return m;
}

}  // namespace mgmrf
