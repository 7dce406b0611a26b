#include "mgmrf/fem.hpp"

#include <string>
#include <vector>

#include "mgmrf/errors.hpp"

namespace mgmrf {

FemMatrices assemble_fem(const TriangulatedDomain& mesh) {
  const int n = mesh.n_vertices();
  FemMatrices fem;
  fem.n_vertices = n;
  fem.lumped_mass = Vec::Zero(n);

  std::vector<Triplet> mass_t, stiff_t;
  mass_t.reserve(mesh.triangles.size() * 9);
  stiff_t.reserve(mesh.triangles.size() * 9);

  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    const auto& a = mesh.vertices[tri[0]];
    const auto& b = mesh.vertices[tri[1]];
    const auto& c = mesh.vertices[tri[2]];
    const double area =
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
    if (!(area > 0.0))
      throw numeric_error("assemble_fem: degenerate triangle " + std::to_string(t));

    // Edge vectors opposite each vertex; grad psi_i = perp(e_i) / (2 area).
    const double ex[3] = {c[0] - b[0], a[0] - c[0], b[0] - a[0]};
    const double ey[3] = {c[1] - b[1], a[1] - c[1], b[1] - a[1]};

    for (int i = 0; i < 3; ++i) {
      fem.lumped_mass[tri[i]] += area / 3.0;
      for (int j = 0; j < 3; ++j) {
        mass_t.emplace_back(tri[i], tri[j], area * (i == j ? 1.0 / 6.0 : 1.0 / 12.0));
        stiff_t.emplace_back(tri[i], tri[j],
                             (ex[i] * ex[j] + ey[i] * ey[j]) / (4.0 * area));
      }
    }
  }

  fem.mass.resize(n, n);
  fem.mass.setFromTriplets(mass_t.begin(), mass_t.end());
  fem.stiffness.resize(n, n);
  fem.stiffness.setFromTriplets(stiff_t.begin(), stiff_t.end());
  return fem;
}

SparseMat k_matrix(const FemMatrices& fem, double kappa_squared) {
  if (!(kappa_squared > 0.0))
    throw config_error("k_matrix: kappa_squared must be positive");
  SparseMat k = fem.stiffness;
  for (int i = 0; i < fem.n_vertices; ++i)
    k.coeffRef(i, i) += kappa_squared * fem.lumped_mass[i];
  return k;
}

}  // namespace mgmrf
