#include "mgmrf/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mgmrf/errors.hpp"

namespace mgmrf {

namespace {

// Cells along a side: an exact multiple of the target is kept, otherwise round
// up so edges shrink rather than grow.
int cell_count(double side, double target) {
  double ratio = side / target;
  long k = std::lround(ratio);
  if (k >= 1 && std::abs(ratio - static_cast<double>(k)) < 1e-9 * ratio) return static_cast<int>(k);
  return std::max(1, static_cast<int>(std::ceil(ratio - 1e-12)));
}

bool barycentric_in_triangle(const TriangulatedDomain& mesh, int t, double x, double y,
                             std::array<double, 3>& w) {
  const auto& tri = mesh.triangles[t];
  const auto& a = mesh.vertices[tri[0]];
  const auto& b = mesh.vertices[tri[1]];
  const auto& c = mesh.vertices[tri[2]];
  double det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
  if (det == 0.0) return false;
  double l1 = ((x - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (y - a[1])) / det;
  double l2 = ((b[0] - a[0]) * (y - a[1]) - (x - a[0]) * (b[1] - a[1])) / det;
  double l0 = 1.0 - l1 - l2;
  const double tol = 1e-12;
  if (l0 < -tol || l1 < -tol || l2 < -tol) return false;
  w = {std::clamp(l0, 0.0, 1.0), std::clamp(l1, 0.0, 1.0), std::clamp(l2, 0.0, 1.0)};
  double s = w[0] + w[1] + w[2];
  w = {w[0] / s, w[1] / s, w[2] / s};
  return true;
}

}  // namespace

TriangulatedDomain build_mesh(const Rectangle& region, double target_edge_length,
                              double extension_margin) {
  if (!(region.width() > 0.0) || !(region.height() > 0.0))
    throw config_error("build_mesh: region must have positive area");
  if (!(target_edge_length > 0.0))
    throw config_error("build_mesh: target edge length must be positive");
  if (extension_margin < 0.0)
    throw config_error("build_mesh: extension margin must be nonnegative");

  const double x0 = region.x0 - extension_margin;
  const double y0 = region.y0 - extension_margin;
  const double x1 = region.x1 + extension_margin;
  const double y1 = region.y1 + extension_margin;

  const int nx = cell_count(x1 - x0, target_edge_length);
  const int ny = cell_count(y1 - y0, target_edge_length);
  const double hx = (x1 - x0) / nx;
  const double hy = (y1 - y0) / ny;

  TriangulatedDomain mesh;
  mesh.extension_margin = extension_margin;
  mesh.vertices.reserve(static_cast<size_t>(nx + 1) * (ny + 1));
  mesh.boundary.reserve(mesh.vertices.capacity());
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      // Endpoints are written exactly so the extended rectangle is covered
      // without rounding slivers.
      double x = (i == nx) ? x1 : x0 + i * hx;
      double y = (j == ny) ? y1 : y0 + j * hy;
      mesh.vertices.push_back({x, y});
      mesh.boundary.push_back(i == 0 || i == nx || j == 0 || j == ny);
    }
  }

  auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };
  mesh.triangles.reserve(static_cast<size_t>(nx) * ny * 2);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      // Alternating diagonals; every triangle below is CCW.
      if ((i + j) % 2 == 0) {
        mesh.triangles.push_back({a, b, c});
        mesh.triangles.push_back({a, c, d});
      } else {
        mesh.triangles.push_back({a, b, d});
        mesh.triangles.push_back({b, c, d});
      }
    }
  }
  return mesh;
}

double triangle_area(const TriangulatedDomain& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  const auto& a = mesh.vertices[tri[0]];
  const auto& b = mesh.vertices[tri[1]];
  const auto& c = mesh.vertices[tri[2]];
  return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
}

BarycentricLocation locate_point(const TriangulatedDomain& mesh, double x, double y) {
  BarycentricLocation loc;
  std::array<double, 3> w;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    if (barycentric_in_triangle(mesh, t, x, y, w)) {
      loc.triangle = t;
      loc.vertex = mesh.triangles[t];
      loc.weight = w;
      return loc;
    }
  }
  throw config_error("locate_point: point (" + std::to_string(x) + ", " + std::to_string(y) +
                     ") is outside the mesh");
}

PointLocator::PointLocator(const TriangulatedDomain& mesh) : mesh_(mesh) {
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  for (const auto& v : mesh.vertices) {
    x0 = std::min(x0, v[0]);
    y0 = std::min(y0, v[1]);
    x1 = std::max(x1, v[0]);
    y1 = std::max(y1, v[1]);
  }
  int target_bins = std::max(1, mesh.n_triangles() / 4);
  double extent = std::max(x1 - x0, y1 - y0);
  cell_ = extent / std::max(1.0, std::floor(std::sqrt(static_cast<double>(target_bins))));
  if (!(cell_ > 0.0)) cell_ = 1.0;
  bx0_ = x0;
  by0_ = y0;
  nx_ = std::max(1, static_cast<int>(std::ceil((x1 - x0) / cell_)));
  ny_ = std::max(1, static_cast<int>(std::ceil((y1 - y0) / cell_)));
  bins_.resize(static_cast<size_t>(nx_) * ny_);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    double tx0 = 1e300, ty0 = 1e300, tx1 = -1e300, ty1 = -1e300;
    for (int k = 0; k < 3; ++k) {
      tx0 = std::min(tx0, mesh.vertices[tri[k]][0]);
      ty0 = std::min(ty0, mesh.vertices[tri[k]][1]);
      tx1 = std::max(tx1, mesh.vertices[tri[k]][0]);
      ty1 = std::max(ty1, mesh.vertices[tri[k]][1]);
    }
    int i0 = std::clamp(static_cast<int>((tx0 - bx0_) / cell_), 0, nx_ - 1);
    int i1 = std::clamp(static_cast<int>((tx1 - bx0_) / cell_), 0, nx_ - 1);
    int j0 = std::clamp(static_cast<int>((ty0 - by0_) / cell_), 0, ny_ - 1);
    int j1 = std::clamp(static_cast<int>((ty1 - by0_) / cell_), 0, ny_ - 1);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) bins_[static_cast<size_t>(j) * nx_ + i].push_back(t);
  }
}

BarycentricLocation PointLocator::locate(double x, double y) const {
  BarycentricLocation loc;
  // Clamp so queries on the outer boundary still hit the edge bins; far-away
  // points fall through to the miss path after an empty scan.
  int i = std::clamp(static_cast<int>((x - bx0_) / cell_), 0, nx_ - 1);
  int j = std::clamp(static_cast<int>((y - by0_) / cell_), 0, ny_ - 1);
  std::array<double, 3> w;
  for (int t : bins_[static_cast<size_t>(j) * nx_ + i]) {
    if (barycentric_in_triangle(mesh_, t, x, y, w)) {
      loc.triangle = t;
      loc.vertex = mesh_.triangles[t];
      loc.weight = w;
      return loc;
    }
  }
  return loc;
}

}  // namespace mgmrf
