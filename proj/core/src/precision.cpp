#include "mgmrf/precision.hpp"

#include <string>
#include <vector>

#include "mgmrf/errors.hpp"

namespace mgmrf {

namespace {

SparseMat scale_rows(const Vec& d, const SparseMat& m) {
  return d.asDiagonal() * m;
}

void append_block(std::vector<Triplet>& out, const SparseMat& block, int row0, int col0,
                  double scale = 1.0) {
  for (int c = 0; c < block.outerSize(); ++c)
    for (SparseMat::InnerIterator it(block, c); it; ++it)
      out.emplace_back(row0 + static_cast<int>(it.row()), col0 + c, scale * it.value());
}

}  // namespace

SparseMat noise_precision(const FemMatrices& fem, int noise_alpha, double noise_kappa) {
  if (noise_alpha < 0) throw config_error("noise_precision: alpha must be >= 0");
  const int n = fem.n_vertices;
  if (noise_alpha == 0) {
    SparseMat q(n, n);
    q.reserve(Eigen::VectorXi::Constant(n, 1));
    for (int i = 0; i < n; ++i) q.insert(i, i) = fem.lumped_mass[i];
    q.makeCompressed();
    return q;
  }
  if (noise_alpha >= 1 && !(noise_kappa > 0.0))
    throw config_error("noise_precision: kappa must be positive for alpha >= 1");

  const SparseMat k = k_matrix(fem, noise_kappa * noise_kappa);
  if (noise_alpha == 1) return k;

  // Unrolled recursion Q_a = K Ct^-1 Q_{a-2} Ct^-1 K from the base case of
  // matching parity (Q_1 = K, Q_2 = K Ct^-1 K).
  const Vec ct_inv = fem.lumped_mass.cwiseInverse();
  const int base = (noise_alpha % 2 == 0) ? 2 : 1;
  SparseMat q = (base == 1) ? k : SparseMat(k * scale_rows(ct_inv, k));
  for (int a = base + 2; a <= noise_alpha; a += 2)
    q = k * scale_rows(ct_inv, q) * scale_rows(ct_inv, k);
  SparseMat qt = q.transpose();
  return 0.5 * (q + qt);
}

SystemMatrices block_matrices(const SpdeSystemSpec& spec, const FemMatrices& fem) {
  spec.validate();
  const int p = spec.field_count;
  const int n = fem.n_vertices;
  if (n <= 0) throw config_error("block_matrices: empty mesh");

  SystemMatrices sys;
  std::vector<Triplet> dt, kt, qft;
  dt.reserve(static_cast<size_t>(p) * n);
  for (int i = 0; i < p; ++i)
    for (int v = 0; v < n; ++v) dt.emplace_back(i * n + v, i * n + v, fem.lumped_mass[v]);

  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      const double bij = spec.b(i, j);
      if (bij == 0.0) continue;
      if (spec.alpha(i, j) == 2) {
        SparseMat kij = k_matrix(fem, spec.kappa(i, j) * spec.kappa(i, j));
        append_block(kt, kij, i * n, j * n, bij);
      } else {
        for (int v = 0; v < n; ++v) kt.emplace_back(i * n + v, j * n + v, bij);
      }
    }
    SparseMat qf = noise_precision(fem, spec.noise_alpha[i], spec.noise_kappa[i]);
    append_block(qft, qf, i * n, i * n);
  }

  const int pn = p * n;
  sys.d.resize(pn, pn);
  sys.d.setFromTriplets(dt.begin(), dt.end());
  sys.k_block.resize(pn, pn);
  sys.k_block.setFromTriplets(kt.begin(), kt.end());
  sys.noise_q.resize(pn, pn);
  sys.noise_q.setFromTriplets(qft.begin(), qft.end());
  return sys;
}

MultivariateGmrf build_precision(const SpdeSystemSpec& spec, const FemMatrices& fem) {
  SystemMatrices sys = block_matrices(spec, fem);
  const int p = spec.field_count;
  const int n = fem.n_vertices;

  Vec d_inv(p * n);
  for (int i = 0; i < p; ++i)
    for (int v = 0; v < n; ++v) d_inv[i * n + v] = 1.0 / fem.lumped_mass[v];

  // Q = K^T (D^-1 Q_f D^-1) K, a congruence, so Q is PSD by construction.
  SparseMat middle = scale_rows(d_inv, SparseMat(sys.noise_q * d_inv.asDiagonal()));
  SparseMat q = sys.k_block.transpose() * middle * sys.k_block;
  SparseMat qt = q.transpose();
  q = 0.5 * (q + qt);
  q.makeCompressed();

  MultivariateGmrf gmrf;
  gmrf.q = std::move(q);
  gmrf.field_count = p;
  gmrf.n_vertices = n;
  return gmrf;
}

}  // namespace mgmrf
