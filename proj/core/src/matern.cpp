#include "mgmrf/matern.hpp"

#include <cmath>
#include <string>

#include "mgmrf/errors.hpp"

namespace mgmrf {

double matern_correlation(double h, double nu, double a) {
  if (!(nu > 0.0) || !(a > 0.0))
    throw config_error("matern_correlation: nu and a must be positive");
  if (h < 0.0) throw config_error("matern_correlation: distance must be nonnegative");
  if (h == 0.0) return 1.0;
  const double x = a * h;
  if (x > 700.0) return 0.0;  // K_nu underflows
  return std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(x, nu) * std::cyl_bessel_k(nu, x);
}

double effective_range(double nu, double a) {
  if (!(nu > 0.0) || !(a > 0.0))
    throw config_error("effective_range: nu and a must be positive");
  return std::sqrt(8.0 * nu) / a;
}

MaternCrossCovariance parsimonious_matern(const Vec& sigma, const Vec& nu_diag, double a,
                                          const Mat& rho) {
  const int p = static_cast<int>(sigma.size());
  if (nu_diag.size() != p || rho.rows() != p || rho.cols() != p)
    throw config_error("parsimonious_matern: inconsistent parameter sizes");
  MaternCrossCovariance m;
  m.field_count = p;
  m.sigma = sigma;
  m.a = Mat::Constant(p, p, a);
  m.rho = rho;
  m.rho.diagonal().setOnes();
  m.nu.resize(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) m.nu(i, j) = 0.5 * (nu_diag[i] + nu_diag[j]);
  return m;
}

namespace {

double cross_covariance(const MaternCrossCovariance& m, int i, int j, double h) {
  const double corr = matern_correlation(h, m.nu(i, j), m.a(i, j));
  if (i == j) return m.sigma[i] * m.sigma[i] * corr;
  return m.rho(i, j) * m.sigma[i] * m.sigma[j] * corr;
}

}  // namespace

Mat assemble_covariance(const MaternCrossCovariance& model,
                        const std::vector<std::array<double, 2>>& locations,
                        const std::vector<int>& field_of, bool check_validity) {
  const int n = static_cast<int>(locations.size());
  if (static_cast<int>(field_of.size()) != n)
    throw config_error("assemble_covariance: locations and field indices differ in length");
  for (int r = 0; r < n; ++r)
    if (field_of[r] < 0 || field_of[r] >= model.field_count)
      throw config_error("assemble_covariance: field index out of range at row " +
                         std::to_string(r));
  Mat cov(n, n);
  for (int r = 0; r < n; ++r) {
    for (int s = 0; s <= r; ++s) {
      const double dx = locations[r][0] - locations[s][0];
      const double dy = locations[r][1] - locations[s][1];
      const double v =
          cross_covariance(model, field_of[r], field_of[s], std::sqrt(dx * dx + dy * dy));
      cov(r, s) = cov(s, r) = v;
    }
  }
  if (check_validity && n > 0) {
    Eigen::LLT<Mat> llt(cov);
    if (llt.info() != Eigen::Success)
      throw numeric_error("assemble_covariance: model is invalid, assembled covariance "
                          "failed to factor");
  }
  return cov;
}

namespace {

// Observation covariance with the per-field nugget on the diagonal, factored.
Eigen::LLT<Mat> observation_llt(const MaternCrossCovariance& model, const ObservationSet& obs) {
  std::vector<std::array<double, 2>> locs(obs.size());
  for (int r = 0; r < obs.size(); ++r) locs[r] = {obs.x[r], obs.y[r]};
  Mat cov = assemble_covariance(model, locs, obs.field_of, false);
  for (int r = 0; r < obs.size(); ++r) cov(r, r) += obs.nugget_variance[obs.field_of[r]];
  Eigen::LLT<Mat> llt(cov);
  if (llt.info() != Eigen::Success)
    throw numeric_error("dense model: observation covariance is singular");
  return llt;
}

}  // namespace

KrigeResult dense_krige(const MaternCrossCovariance& model, const ObservationSet& obs,
                        const std::vector<std::array<double, 2>>& target_locations,
                        const std::vector<int>& target_fields) {
  const int t = static_cast<int>(target_locations.size());
  if (static_cast<int>(target_fields.size()) != t)
    throw config_error("dense_krige: target locations and fields differ in length");
  KrigeResult out;
  out.mean = Vec::Zero(t);
  out.variance = Vec::Zero(t);
  for (int r = 0; r < t; ++r)
    out.variance[r] = model.sigma[target_fields[r]] * model.sigma[target_fields[r]];
  if (obs.size() == 0) return out;

  auto llt = observation_llt(model, obs);
  Vec alpha = llt.solve(obs.value);

  for (int r = 0; r < t; ++r) {
    Vec c(obs.size());
    for (int s = 0; s < obs.size(); ++s) {
      const double dx = target_locations[r][0] - obs.x[s];
      const double dy = target_locations[r][1] - obs.y[s];
      c[s] = cross_covariance(model, target_fields[r], obs.field_of[s],
                              std::sqrt(dx * dx + dy * dy));
    }
    out.mean[r] = c.dot(alpha);
    out.variance[r] -= c.dot(llt.solve(c));
  }
  return out;
}

double matern_log_likelihood(const MaternCrossCovariance& model, const ObservationSet& obs) {
  if (obs.size() == 0) return 0.0;
  auto llt = observation_llt(model, obs);
  double log_det = 0.0;
  for (int i = 0; i < obs.size(); ++i) log_det += 2.0 * std::log(llt.matrixLLT()(i, i));
  const double quad = obs.value.dot(llt.solve(obs.value));
  return -0.5 * (log_det + quad + obs.size() * std::log(2.0 * M_PI));
}

}  // namespace mgmrf
