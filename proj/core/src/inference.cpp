#include "mgmrf/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "mgmrf/errors.hpp"
#include "mgmrf/precision.hpp"

namespace mgmrf {

void FitConfig::validate() const {
  base.validate();
  const int p = base.field_count;
  std::set<std::array<int, 2>> seen;
  for (const auto& e : free_kappa) {
    if (e[0] < 0 || e[0] >= p || e[1] < 0 || e[1] >= p)
      throw config_error("fit config: free kappa index out of range");
    if (base.alpha(e[0], e[1]) != 2)
      throw config_error("fit config: kappa[" + std::to_string(e[0]) + "][" +
                         std::to_string(e[1]) + "] is inactive (alpha 0) and cannot be free");
    if (!seen.insert(e).second) throw config_error("fit config: duplicate free kappa entry");
  }
  seen.clear();
  for (const auto& e : free_b) {
    if (e[0] < 0 || e[0] >= p || e[1] < 0 || e[1] >= p)
      throw config_error("fit config: free b index out of range");
    if (!seen.insert(e).second) throw config_error("fit config: duplicate free b entry");
  }
  if (!(prior_kappa_log_sd > 0.0) || !(prior_b_sd > 0.0))
    throw config_error("fit config: prior scales must be positive");
}

Vec pack_parameters(const FitConfig& config, const SpdeSystemSpec& spec) {
  Vec x(config.n_free());
  int k = 0;
  for (const auto& e : config.free_kappa) {
    const double v = spec.kappa(e[0], e[1]);
    if (!(v > 0.0)) throw config_error("pack: free kappa entries must be positive");
    x[k++] = std::log(v);
  }
  for (const auto& e : config.free_b) x[k++] = spec.b(e[0], e[1]);
  return x;
}

SpdeSystemSpec unpack_parameters(const FitConfig& config, const Vec& packed) {
  if (packed.size() != config.n_free())
    throw config_error("unpack: parameter vector has wrong length");
  SpdeSystemSpec spec = config.base;
  int k = 0;
  for (const auto& e : config.free_kappa) spec.kappa(e[0], e[1]) = std::exp(packed[k++]);
  for (const auto& e : config.free_b) spec.b(e[0], e[1]) = packed[k++];
  if (config.tie_noise_kappa)
    for (int i = 0; i < spec.field_count; ++i) spec.noise_kappa[i] = spec.kappa(i, i);
  return spec;
}

double log_prior(const FitConfig& config, const Vec& packed) {
  double lp = 0.0;
  int k = 0;
  const double vk = config.prior_kappa_log_sd * config.prior_kappa_log_sd;
  const double vb = config.prior_b_sd * config.prior_b_sd;
  for (size_t i = 0; i < config.free_kappa.size(); ++i, ++k)
    lp += -0.5 * packed[k] * packed[k] / vk - std::log(config.prior_kappa_log_sd) -
          0.5 * std::log(2.0 * M_PI);
  for (size_t i = 0; i < config.free_b.size(); ++i, ++k)
    lp += -0.5 * packed[k] * packed[k] / vb - std::log(config.prior_b_sd) -
          0.5 * std::log(2.0 * M_PI);
  return lp;
}

LogPosterior log_posterior(const FitConfig& config, const FemMatrices& fem,
                           const ObservationSet& obs, const Vec& packed) {
  LogPosterior out;
  out.log_prior = log_prior(config, packed);
  // Without data the two log determinants cancel and mu_c = 0; skipping the
  // factorization keeps prior-only evaluation defined even where Q would be
  // singular (all b at zero).
  if (obs.size() == 0) {
    out.value = out.log_prior;
    return out;
  }
  try {
    SpdeSystemSpec spec = unpack_parameters(config, packed);
    spec.validate();
    MultivariateGmrf gmrf = build_precision(spec, fem);
    CholeskyFactor prior_factor(gmrf.q);
    out.half_logdet_prior = 0.5 * prior_factor.log_det();

    ConditionedGmrf cond = condition(gmrf, obs);
    out.half_logdet_posterior = 0.5 * cond.factor->log_det();
    out.half_quadratic = 0.5 * cond.canonical.dot(cond.mean);
    out.value = out.log_prior + out.half_logdet_prior - out.half_logdet_posterior +
                out.half_quadratic;
    if (!std::isfinite(out.value)) throw numeric_error("log posterior is not finite");
  } catch (const std::runtime_error& e) {
    out.ok = false;
    out.diagnostic = e.what();
    out.value = -std::numeric_limits<double>::infinity();
  }
  return out;
}

namespace {

// Flip b rows to a positive free diagonal. Negating one equation leaves the
// precision unchanged, so this picks a fixed representative of each mode pair.
void canonicalize(const FitConfig& config, Vec& packed) {
  SpdeSystemSpec spec = unpack_parameters(config, packed);
  for (int i = 0; i < spec.field_count; ++i) {
    if (spec.b(i, i) >= 0.0) continue;
    bool row_free = false;
    bool row_flippable = true;
    for (int j = 0; j < spec.field_count; ++j) {
      if (spec.b(i, j) == 0.0) continue;
      const bool is_free =
          std::find(config.free_b.begin(), config.free_b.end(), std::array<int, 2>{i, j}) !=
          config.free_b.end();
      if (is_free)
        row_free = true;
      else
        row_flippable = false;
    }
    if (row_free && row_flippable)
      for (int j = 0; j < spec.field_count; ++j) spec.b(i, j) = -spec.b(i, j);
  }
  packed = pack_parameters(config, spec);
}

}  // namespace

FitResult fit(const FitConfig& config, const FemMatrices& fem, const ObservationSet& obs) {
  config.validate();
  if (config.n_free() == 0) throw config_error("fit: no free parameters");

  const Objective objective = [&](const Vec& x) {
    return -log_posterior(config, fem, obs, x).value;
  };

  // Start at the configured initial values; with data present a zero diagonal
  // b would make the start infeasible, so those coordinates move to 1.
  Vec x0 = pack_parameters(config, config.base);
  if (obs.size() > 0) {
    int k = static_cast<int>(config.free_kappa.size());
    for (const auto& e : config.free_b) {
      if (e[0] == e[1] && x0[k] == 0.0) x0[k] = 1.0;
      ++k;
    }
  }
  std::vector<Vec> starts{x0};
  if (config.optimizer.n_starts > 1) {
    Vec delta(config.n_free());
    for (int i = 0; i < config.n_free(); ++i)
      delta[i] = (i < static_cast<int>(config.free_kappa.size())) ? 1.0 : 0.5;
    starts.push_back(x0 + delta);
    if (config.optimizer.n_starts > 2) starts.push_back(x0 - delta);
  }

  OptimizeResult best;
  best.f = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const Vec& s : starts) {
    if (!std::isfinite(objective(s))) continue;
    OptimizeResult r = minimize_bfgs(objective, s, config.optimizer);
    if (!any || r.f < best.f) {
      best = r;
      any = true;
    }
  }
  if (!any) throw numeric_error("fit: no feasible starting point");

  canonicalize(config, best.x);

  FitResult out;
  out.packed_mode = best.x;
  out.estimate = unpack_parameters(config, best.x);
  out.log_posterior = -objective(best.x);
  out.iterations = best.iterations;
  out.grad_norm = best.grad_norm;
  out.converged = best.converged;
  out.ascent.reserve(best.trace.size());
  for (double v : best.trace) out.ascent.push_back(-v);

  // Curvature std devs: invert the finite-difference Hessian of the negative
  // log posterior at the mode.
  const int m = config.n_free();
  Mat hess = central_hessian(objective, best.x, config.optimizer.hess_step);
  Eigen::LLT<Mat> llt(hess);
  out.packed_sd = Vec::Constant(m, std::numeric_limits<double>::quiet_NaN());
  out.sd_reliable = llt.info() == Eigen::Success;
  if (out.sd_reliable) {
    Mat cov = llt.solve(Mat::Identity(m, m));
    for (int i = 0; i < m; ++i) out.packed_sd[i] = std::sqrt(std::max(cov(i, i), 0.0));
  }
  int k = 0;
  for (const auto& e : config.free_kappa) {
    // Delta method: sd(kappa) = kappa * sd(log kappa).
    out.kappa_sd.push_back(out.estimate.kappa(e[0], e[1]) * out.packed_sd[k]);
    ++k;
  }
  for (size_t i = 0; i < config.free_b.size(); ++i) out.b_sd.push_back(out.packed_sd[k++]);
  return out;
}

PredictionResult predict(const ConditionedGmrf& posterior, const TriangulatedDomain& mesh,
                         const std::vector<double>& x, const std::vector<double>& y,
                         const std::vector<int>& field_of, const Vec& value) {
  const int t = static_cast<int>(x.size());
  if (static_cast<int>(y.size()) != t || static_cast<int>(field_of.size()) != t ||
      value.size() != t)
    throw config_error("predict: target column lengths differ");

  const int n = posterior.posterior.n_vertices;
  const int p = posterior.posterior.field_count;
  PointLocator locator(mesh);
  PredictionResult out;
  out.predicted = Vec::Zero(t);
  out.field_of = field_of;
  for (int r = 0; r < t; ++r) {
    if (field_of[r] < 0 || field_of[r] >= p)
      throw config_error("predict: field index out of range at row " + std::to_string(r));
    auto loc = locator.locate(x[r], y[r]);
    if (!loc.inside())
      throw config_error("predict: target at row " + std::to_string(r) +
                         " is outside the mesh");
    double v = 0.0;
    for (int k = 0; k < 3; ++k)
      v += loc.weight[k] * posterior.mean[field_of[r] * n + loc.vertex[k]];
    out.predicted[r] = v;
  }

  out.relative_error.assign(p, 0.0);
  for (int f = 0; f < p; ++f) {
    double num = 0.0, den = 0.0;
    for (int r = 0; r < t; ++r) {
      if (field_of[r] != f) continue;
      num += (out.predicted[r] - value[r]) * (out.predicted[r] - value[r]);
      den += out.predicted[r] * out.predicted[r];
    }
    out.relative_error[f] = (den > 0.0) ? std::sqrt(num / den) : 0.0;
  }
  return out;
}

ObservationSet with_nugget(const ObservationSet& obs, const Vec& nugget_variance) {
  if (nugget_variance.size() != obs.field_count)
    throw config_error("with_nugget: one variance per field required");
  for (int i = 0; i < obs.field_count; ++i)
    if (!(nugget_variance[i] > 0.0))
      throw config_error("with_nugget: nugget variances must be positive");
  ObservationSet out = obs;
  out.nugget_variance = nugget_variance;
  for (int r = 0; r < out.size(); ++r)
    out.q_n_diag[r] = 1.0 / nugget_variance[out.field_of[r]];
  return out;
}

}  // namespace mgmrf
