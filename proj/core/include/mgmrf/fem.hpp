#pragma once

#include "mgmrf/mesh.hpp"
#include "mgmrf/types.hpp"

namespace mgmrf {

// First-order FEM matrices on a triangulation, natural (Neumann) boundary.
//   mass        C,  C[m][n] = <psi_m, psi_n>
//   lumped_mass Ct, Ct[m]   = <psi_m, 1>   (row sums of C)
//   stiffness   G,  G[m][n] = <grad psi_m, grad psi_n>
struct FemMatrices {
  SparseMat mass;
  Vec lumped_mass;
  SparseMat stiffness;
  int n_vertices = 0;
};

FemMatrices assemble_fem(const TriangulatedDomain& mesh);

// K = kappa^2 * Ct + G, the discretized shifted Laplacian. The lumped mass is
// used so K keeps the stiffness sparsity pattern.
SparseMat k_matrix(const FemMatrices& fem, double kappa_squared);

}  // namespace mgmrf
