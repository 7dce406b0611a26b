#include "mgmrf/gmrf.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <numeric>
#include <string>

#include "mgmrf/errors.hpp"
#include "mgmrf/rng.hpp"
#include "mgmrf/sparse_inverse.hpp"

namespace mgmrf {

struct CholeskyFactor::Impl {
  Eigen::SimplicialLLT<SparseMat> llt;
};

namespace {

std::vector<int> permutation_as_map(
    const Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int>& p, int n) {
  // Applying the permutation to (0, 1, ..., n-1) reads off, at each factor
  // position, which original index lands there.
  Vec seq(n);
  for (int i = 0; i < n; ++i) seq[i] = i;
  Vec permuted = p * seq;
  std::vector<int> map(n);
  for (int i = 0; i < n; ++i) map[i] = static_cast<int>(std::lround(permuted[i]));
  return map;
}

}  // namespace

CholeskyFactor::CholeskyFactor(const SparseMat& q) : impl_(std::make_unique<Impl>()) {
  if (q.rows() != q.cols() || q.rows() == 0)
    throw config_error("factorize: matrix must be square and nonempty");
  dim_ = static_cast<int>(q.rows());
  impl_->llt.compute(q);
  if (impl_->llt.info() != Eigen::Success) {
    // Rerun as LDLT to locate the offending pivot for the error message.
    Eigen::SimplicialLDLT<SparseMat> ldlt(q);
    int bad = -1;
    if (ldlt.info() == Eigen::Success || ldlt.vectorD().size() == dim_) {
      auto map = permutation_as_map(ldlt.permutationP(), dim_);
      const Vec& d = ldlt.vectorD();
      for (int k = 0; k < dim_; ++k)
        if (!(d[k] > 0.0)) {
          bad = map[k];
          break;
        }
    }
    throw numeric_error("factorize: matrix is not positive definite (leading minor at index " +
                        std::to_string(bad) + ")");
  }
  factor_to_original_ = permutation_as_map(impl_->llt.permutationP(), dim_);
  SparseMat l = impl_->llt.matrixL();
  log_det_ = 0.0;
  for (int k = 0; k < dim_; ++k) log_det_ += 2.0 * std::log(l.coeff(k, k));
}

CholeskyFactor::~CholeskyFactor() = default;

Vec CholeskyFactor::solve(const Vec& rhs) const {
  if (rhs.size() != dim_) throw config_error("solve: right-hand side has wrong length");
  return impl_->llt.solve(rhs);
}

Vec CholeskyFactor::half_solve(const Vec& z) const {
  if (z.size() != dim_) throw config_error("half_solve: input has wrong length");
  Vec w = impl_->llt.matrixU().solve(z);
  return impl_->llt.permutationPinv() * w;
}

SparseMat CholeskyFactor::lower() const {
  SparseMat l = impl_->llt.matrixL();
  l.makeCompressed();
  return l;
}

CholeskyFactor factorize(const MultivariateGmrf& gmrf) { return CholeskyFactor(gmrf.q); }

Vec sample(const CholeskyFactor& factor, const Vec& mean, std::uint64_t seed) {
  if (mean.size() != factor.dim()) throw config_error("sample: mean has wrong length");
  PhiloxRng rng(seed);
  Vec z(factor.dim());
  for (int i = 0; i < factor.dim(); ++i) z[i] = rng.normal();
  return mean + factor.half_solve(z);
}

Mat sample_many(const CholeskyFactor& factor, const Vec& mean, int n, std::uint64_t seed) {
  if (mean.size() != factor.dim()) throw config_error("sample: mean has wrong length");
  if (n < 0) throw config_error("sample: draw count must be nonnegative");
  PhiloxRng rng(seed);
  Mat out(factor.dim(), n);
  Vec z(factor.dim());
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < factor.dim(); ++i) z[i] = rng.normal();
    out.col(j) = mean + factor.half_solve(z);
  }
  return out;
}

CorrelationSurfaces correlation_surfaces(const MultivariateGmrf& gmrf,
                                         const CholeskyFactor& factor, int reference_vertex) {
  const int p = gmrf.field_count, n = gmrf.n_vertices;
  if (reference_vertex < 0 || reference_vertex >= n)
    throw config_error("correlation_surfaces: reference vertex " +
                       std::to_string(reference_vertex) + " out of range");

  CorrelationSurfaces out;
  out.reference_vertex = reference_vertex;
  out.marginal_sd = marginal_variances(factor).cwiseSqrt();

  std::vector<Vec> columns(p);
  for (int i = 0; i < p; ++i) {
    Vec e = Vec::Zero(p * n);
    e[i * n + reference_vertex] = 1.0;
    columns[i] = factor.solve(e);
  }
  for (int i = 0; i < p; ++i) {
    for (int j = i; j < p; ++j) {
      Vec corr(n);
      const double sd_ref = out.marginal_sd[i * n + reference_vertex];
      for (int v = 0; v < n; ++v)
        corr[v] = columns[i][j * n + v] / (sd_ref * out.marginal_sd[j * n + v]);
      out.pairs.push_back({i, j});
      out.corr.push_back(std::move(corr));
    }
  }
  return out;
}

CorrelationSurfaces correlation_surfaces(const MultivariateGmrf& gmrf, int reference_vertex) {
  CholeskyFactor factor = factorize(gmrf);
  return correlation_surfaces(gmrf, factor, reference_vertex);
}

ObservationSet make_observations(const TriangulatedDomain& mesh, int field_count,
                                 const std::vector<double>& x, const std::vector<double>& y,
                                 const std::vector<int>& field_of, const Vec& value,
                                 const Vec& nugget_variance, std::vector<int>* rejected_rows) {
  const int t_in = static_cast<int>(x.size());
  if (static_cast<int>(y.size()) != t_in || static_cast<int>(field_of.size()) != t_in ||
      static_cast<int>(value.size()) != t_in)
    throw config_error("make_observations: column lengths differ");
  if (static_cast<int>(nugget_variance.size()) != field_count)
    throw config_error("make_observations: one nugget variance per field required");
  for (int i = 0; i < field_count; ++i)
    if (!(nugget_variance[i] > 0.0))
      throw config_error("make_observations: nugget variances must be positive");

  const int n = mesh.n_vertices();
  PointLocator locator(mesh);

  ObservationSet obs;
  obs.field_count = field_count;
  obs.n_vertices = n;
  obs.nugget_variance = nugget_variance;

  std::vector<Triplet> at;
  std::vector<double> values_kept;
  for (int r = 0; r < t_in; ++r) {
    if (field_of[r] < 0 || field_of[r] >= field_count)
      throw config_error("make_observations: field index " + std::to_string(field_of[r]) +
                         " out of range at row " + std::to_string(r));
    auto loc = locator.locate(x[r], y[r]);
    if (!loc.inside()) {
      if (!rejected_rows)
        throw config_error("make_observations: point at row " + std::to_string(r) +
                           " lies outside the mesh");
      rejected_rows->push_back(r);
      continue;
    }
    const int row = static_cast<int>(values_kept.size());
    for (int k = 0; k < 3; ++k)
      if (loc.weight[k] != 0.0)
        at.emplace_back(row, field_of[r] * n + loc.vertex[k], loc.weight[k]);
    obs.x.push_back(x[r]);
    obs.y.push_back(y[r]);
    obs.field_of.push_back(field_of[r]);
    values_kept.push_back(value[r]);
  }
  if (t_in > 0 && values_kept.empty())
    throw config_error("make_observations: every observation lies outside the mesh");

  const int t = static_cast<int>(values_kept.size());
  obs.value = Eigen::Map<Vec>(values_kept.data(), t);
  obs.a.resize(t, static_cast<Eigen::Index>(field_count) * n);
  obs.a.setFromTriplets(at.begin(), at.end());
  obs.q_n_diag.resize(t);
  for (int r = 0; r < t; ++r) obs.q_n_diag[r] = 1.0 / nugget_variance[obs.field_of[r]];
  return obs;
}

ConditionedGmrf condition(const MultivariateGmrf& gmrf, const ObservationSet& obs) {
  if (obs.field_count != gmrf.field_count || obs.n_vertices != gmrf.n_vertices)
    throw config_error("condition: observations were built for a different model size");

  ConditionedGmrf out;
  out.posterior.field_count = gmrf.field_count;
  out.posterior.n_vertices = gmrf.n_vertices;
  if (obs.size() == 0) {
    out.posterior.q = gmrf.q;
    out.canonical = Vec::Zero(gmrf.q.rows());
  } else {
    SparseMat qn_a = obs.q_n_diag.asDiagonal() * obs.a;
    SparseMat qc = gmrf.q + SparseMat(obs.a.transpose() * qn_a);
    SparseMat qct = qc.transpose();
    out.posterior.q = 0.5 * (qc + qct);
    out.canonical = obs.a.transpose() * (obs.q_n_diag.cwiseProduct(obs.value));
  }
  try {
    out.factor = std::make_shared<CholeskyFactor>(out.posterior.q);
  } catch (const numeric_error& e) {
    throw numeric_error(std::string("condition: posterior precision failed to factor: ") +
                        e.what());
  }
  out.mean = out.factor->solve(out.canonical);
  return out;
}

}  // namespace mgmrf
