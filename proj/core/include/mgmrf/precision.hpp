#pragma once

#include "mgmrf/fem.hpp"
#include "mgmrf/spde_spec.hpp"
#include "mgmrf/types.hpp"

namespace mgmrf {

// Zero-mean GMRF over p stacked fields, field-major indexing: field i owns
// rows [i*N, (i+1)*N).
struct MultivariateGmrf {
  SparseMat q;
  int field_count = 0;
  int n_vertices = 0;
};

// Precision of the FEM weight vector of a driving noise field.
//   alpha 0: Q = Ct                (white noise under the lumped inner product)
//   alpha 1: Q = K
//   alpha 2: Q = K Ct^-1 K
//   alpha >= 3: Q = K Ct^-1 Q_{alpha-2} Ct^-1 K
SparseMat noise_precision(const FemMatrices& fem, int noise_alpha, double noise_kappa);

// The assembled system-level matrices. k_block row i column j discretizes the
// operator applied by equation i to field j: b*(kappa^2*Ct + G) for alpha 2,
// b*I for alpha 0, empty where b = 0.
struct SystemMatrices {
  SparseMat d;        // diag(Ct, ..., Ct)
  SparseMat k_block;  // pN x pN
  SparseMat noise_q;  // diag(Q_f1, ..., Q_fp)
};

SystemMatrices block_matrices(const SpdeSystemSpec& spec, const FemMatrices& fem);

// Q = K^T D^-1 Q_f D^-1 K. The transpose keeps Q symmetric when the coupling
// makes K non-symmetric as a block matrix.
MultivariateGmrf build_precision(const SpdeSystemSpec& spec, const FemMatrices& fem);

}  // namespace mgmrf
