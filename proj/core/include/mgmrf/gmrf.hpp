#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "mgmrf/mesh.hpp"
#include "mgmrf/precision.hpp"
#include "mgmrf/types.hpp"

namespace mgmrf {

// Sparse Cholesky of a precision matrix with a fill-reducing ordering,
// P Q P^T = L L^T. Immutable after construction; concurrent solves are safe.
class CholeskyFactor {
 public:
  // Throws numeric_error on an indefinite matrix, reporting the pivot index.
  explicit CholeskyFactor(const SparseMat& q);
  ~CholeskyFactor();
  CholeskyFactor(const CholeskyFactor&) = delete;
  CholeskyFactor& operator=(const CholeskyFactor&) = delete;

  int dim() const { return dim_; }
  double log_det() const { return log_det_; }

  // x with Q x = rhs.
  Vec solve(const Vec& rhs) const;

  // P^T L^-T z: maps iid standard normals to draws with covariance Q^-1.
  Vec half_solve(const Vec& z) const;

  SparseMat lower() const;  // L, in factor ordering
  // factor_to_original[k] is the original index stored at factor position k.
  const std::vector<int>& factor_to_original() const { return factor_to_original_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::vector<int> factor_to_original_;
  double log_det_ = 0.0;
  int dim_ = 0;
};

CholeskyFactor factorize(const MultivariateGmrf& gmrf);

// One draw mean + P^T L^-T z with z ~ N(0, I) from the seeded counter RNG.
Vec sample(const CholeskyFactor& factor, const Vec& mean, std::uint64_t seed);

// n draws as columns, one RNG stream, so draw j is independent of n.
Mat sample_many(const CholeskyFactor& factor, const Vec& mean, int n, std::uint64_t seed);

// Correlations between field i at a fixed reference vertex and field j at
// every vertex, for all pairs i <= j, from exact column solves and
// partial-inversion marginal variances.
struct CorrelationSurfaces {
  int reference_vertex = -1;
  std::vector<std::array<int, 2>> pairs;  // (i, j), i <= j
  std::vector<Vec> corr;                  // one length-N field per pair
  Vec marginal_sd;                        // length pN
};

CorrelationSurfaces correlation_surfaces(const MultivariateGmrf& gmrf,
                                         const CholeskyFactor& factor, int reference_vertex);
CorrelationSurfaces correlation_surfaces(const MultivariateGmrf& gmrf, int reference_vertex);

// Point observations of the latent fields with iid per-field nugget noise.
// Row r of a interpolates field_of[r] at the observation location; q_n is the
// diagonal observation precision.
struct ObservationSet {
  int field_count = 0;
  int n_vertices = 0;
  std::vector<double> x, y;
  std::vector<int> field_of;
  Vec value;
  Vec nugget_variance;  // per field
  SparseMat a;          // t x pN, rows sum to 1, <= 3 nonzeros each
  Vec q_n_diag;         // length t

  int size() const { return static_cast<int>(value.size()); }
};

// Builds the interpolation matrix behind an ObservationSet. When
// rejected_rows is null any point outside the mesh throws; otherwise such
// rows are dropped and their indices recorded, and only an entirely empty
// result throws.
ObservationSet make_observations(const TriangulatedDomain& mesh, int field_count,
                                 const std::vector<double>& x, const std::vector<double>& y,
                                 const std::vector<int>& field_of, const Vec& value,
                                 const Vec& nugget_variance,
                                 std::vector<int>* rejected_rows = nullptr);

// Posterior of x given y: Q_c = Q + A^T Q_n A, mu_c = Q_c^-1 A^T Q_n y.
struct ConditionedGmrf {
  MultivariateGmrf posterior;  // precision Q_c
  Vec canonical;               // b_c = A^T Q_n y
  Vec mean;                    // mu_c
  std::shared_ptr<const CholeskyFactor> factor;
};

ConditionedGmrf condition(const MultivariateGmrf& gmrf, const ObservationSet& obs);

}  // namespace mgmrf
