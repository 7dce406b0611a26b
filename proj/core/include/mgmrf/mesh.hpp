#pragma once

#include <array>
#include <vector>

namespace mgmrf {

// Axis-aligned rectangle, x0 < x1 and y0 < y1.
struct Rectangle {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
};

// Conforming triangulation of a planar region. Triangles are CCW triples of
// vertex indices; boundary flags mark vertices on the outer boundary of the
// (possibly extended) region.
struct TriangulatedDomain {
  std::vector<std::array<double, 2>> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<bool> boundary;
  double extension_margin = 0.0;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }
};

// Result of a point-location query. triangle == -1 means the point is outside
// the mesh; otherwise weights are nonnegative and sum to 1.
struct BarycentricLocation {
  int triangle = -1;
  std::array<int, 3> vertex{{-1, -1, -1}};
  std::array<double, 3> weight{{0.0, 0.0, 0.0}};
  bool inside() const { return triangle >= 0; }
};

// Triangulate `region` grown by `extension_margin` on every side. Cell counts
// are chosen so edges stay near target_edge_length; when the target divides
// the side lengths exactly the grid reproduces it. Vertices are ordered
// row-major by (y, x), so output is deterministic for identical inputs.
TriangulatedDomain build_mesh(const Rectangle& region, double target_edge_length,
                              double extension_margin = 0.0);

// Brute-force point location; throws config_error when the point lies outside
// the mesh. For many queries against one mesh use PointLocator, whose locate()
// reports a miss through the sentinel instead.
BarycentricLocation locate_point(const TriangulatedDomain& mesh, double x, double y);

// Uniform-bin accelerator for repeated point location on a fixed mesh.
// Read-only after construction, safe for concurrent queries.
class PointLocator {
 public:
  explicit PointLocator(const TriangulatedDomain& mesh);
  BarycentricLocation locate(double x, double y) const;

 private:
  const TriangulatedDomain& mesh_;
  double bx0_, by0_, cell_;
  int nx_, ny_;
  std::vector<std::vector<int>> bins_;
};

double triangle_area(const TriangulatedDomain& mesh, int t);

}  // namespace mgmrf
