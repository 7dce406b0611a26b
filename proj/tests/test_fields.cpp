#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <gsl/gsl_sf_bessel.h>
#include <gsl/gsl_sf_gamma.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "doctest.h"
#include "mgmrf/errors.hpp"
#include "mgmrf/fem.hpp"
#include "mgmrf/gmrf.hpp"
#include "mgmrf/matern.hpp"
#include "mgmrf/mesh.hpp"
#include "mgmrf/precision.hpp"
#include "mgmrf/rng.hpp"
#include "mgmrf/spectral.hpp"
#include "mgmrf/types.hpp"

using namespace mgmrf;

namespace {

SpdeSystemSpec bivariate_spec(double k11, double k21, double k22, double b11, double b21,
                              double b22, int a11, int a21, int a22, int an1, int an2,
                              double kn1, double kn2) {
  SpdeSystemSpec s;
  s.field_count = 2;
  s.alpha.resize(2, 2);
  s.alpha << a11, 0, a21, a22;
  s.kappa.resize(2, 2);
  s.kappa << k11, 0.0, k21, k22;
  s.b.resize(2, 2);
  s.b << b11, 0.0, b21, b22;
  s.noise_alpha.resize(2);
  s.noise_alpha << an1, an2;
  s.noise_kappa.resize(2);
  s.noise_kappa << kn1, kn2;
  return s;
}

// Positively coupled pair: b21 b22 < 0.
SpdeSystemSpec table_like_spec(double sign_b21 = -1.0) {
  return bivariate_spec(0.15, 0.5, 0.3, 1.0, sign_b21, 1.0, 2, 2, 2, 0, 0, 0.15, 0.3);
}

// Equal-kappa regime where field 1 is exactly Matern with nu = 1.
SpdeSystemSpec matching_spec(double b21 = -1.0, double kappa = 1.0) {
  return bivariate_spec(kappa, kappa, kappa, 1.0, b21, 1.0, 2, 2, 2, 0, 0, kappa, kappa);
}

double maxabs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

double rel_err(const Mat& got, const Mat& want) {
  return maxabs(got - want) / maxabs(want);
}

// Strict relative comparison; Approx would soften it for tiny magnitudes.
bool close_rel(double got, double want, double tol) {
  return std::abs(got - want) <= tol * std::abs(want);
}

// Radial 2-D Fourier transform of the Matern correlation: the Hankel integral
// (2 pi)^-1 * int_0^inf r sigma2 M(r) J0(k r) dr, truncated where M is tiny.
double hankel_spectrum(double sigma2, double nu, double a, double k) {
  const double rmax = 60.0 / a;
  const int n = 60000;
  const double dr = rmax / n;
  double acc = 0.0;
  for (int i = 1; i <= n; ++i) {
    double r = i * dr;
    double w = (i == n) ? 0.5 : 1.0;
    acc += w * r * matern_correlation(r, nu, a) * gsl_sf_bessel_J0(k * r);
  }
  return sigma2 * acc * dr / (2.0 * M_PI);
}

}  // namespace

TEST_CASE("noise_precision: parameter validation and the white-noise base case") {
  auto fem = assemble_fem(build_mesh(Rectangle{0, 0, 1, 1}, 0.5));
  CHECK_THROWS_AS(noise_precision(fem, -1, 1.0), config_error);
  CHECK_THROWS_AS(noise_precision(fem, 1, 0.0), config_error);

  Mat q0 = Mat(noise_precision(fem, 0, 0.0));
  CHECK((q0 - Mat(fem.lumped_mass.asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("noise_precision: first order equals the shifted Laplacian exactly") {
  auto fem = assemble_fem(build_mesh(Rectangle{0, 0, 1, 1}, 0.3));
  Mat q1 = Mat(noise_precision(fem, 1, 0.7));
  Mat k = Mat(k_matrix(fem, 0.49));
  CHECK(maxabs(q1 - k) == 0.0);
}

TEST_CASE("noise_precision: second order matches the dense 3x3 product") {
  TriangulatedDomain mesh;
  mesh.vertices = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  mesh.triangles = {{0, 1, 2}};
  mesh.boundary = {true, true, true};
  auto fem = assemble_fem(mesh);

  Mat k = Mat(k_matrix(fem, 1.21));
  Mat ci = fem.lumped_mass.cwiseInverse().asDiagonal();
  Mat want = k * ci * k;
  Mat got = Mat(noise_precision(fem, 2, 1.1));
  CHECK(rel_err(got, want) <= 1e-14);
}

TEST_CASE("noise_precision: higher orders match the unrolled dense recursion") {
  auto fem = assemble_fem(build_mesh(Rectangle{0, 0, 1, 1}, 0.2));
  REQUIRE(fem.n_vertices <= 50);
  Mat k = Mat(k_matrix(fem, 0.81));
  Mat ci = fem.lumped_mass.cwiseInverse().asDiagonal();

  Mat want3 = k * ci * k * ci * k;
  CHECK(rel_err(Mat(noise_precision(fem, 3, 0.9)), want3) <= 1e-10);

  Mat want4 = k * ci * (k * ci * k) * ci * k;
  CHECK(rel_err(Mat(noise_precision(fem, 4, 0.9)), want4) <= 1e-10);
}

TEST_CASE("block_matrices: single-field system") {
  auto fem = assemble_fem(build_mesh(Rectangle{0, 0, 1, 1}, 0.4));
  SpdeSystemSpec s;
  s.field_count = 1;
  s.alpha.resize(1, 1);
  s.alpha << 2;
  s.kappa.resize(1, 1);
  s.kappa << 0.8;
  s.b.resize(1, 1);
  s.b << 3.0;
  s.noise_alpha.resize(1);
  s.noise_alpha << 1;
  s.noise_kappa.resize(1);
  s.noise_kappa << 0.8;

  auto sys = block_matrices(s, fem);
  CHECK(maxabs(Mat(sys.k_block) - 3.0 * Mat(k_matrix(fem, 0.64))) <= 1e-14);
  CHECK(maxabs(Mat(sys.d) - Mat(fem.lumped_mass.asDiagonal())) == 0.0);
  CHECK(maxabs(Mat(sys.noise_q) - Mat(noise_precision(fem, 1, 0.8))) == 0.0);
}

TEST_CASE("block_matrices: coupling block structure") {
  auto fem = assemble_fem(build_mesh(Rectangle{0, 0, 1, 1}, 0.4));
  const int n = fem.n_vertices;

  auto sys = block_matrices(table_like_spec(), fem);
  Mat k = Mat(sys.k_block);
  CHECK(maxabs(k.block(0, n, n, n)) == 0.0);
  CHECK(maxabs(k.block(0, 0, n, n) - Mat(k_matrix(fem, 0.15 * 0.15))) <= 1e-14);
  CHECK(maxabs(k.block(n, 0, n, n) + Mat(k_matrix(fem, 0.25))) <= 1e-14);

  // A zero-order coupling enters as a scaled identity.
  auto s0 = bivariate_spec(1.0, 0.5, 1.0, 1.0, -0.7, 1.0, 2, 0, 2, 0, 0, 1.0, 1.0);
  Mat k0 = Mat(block_matrices(s0, fem).k_block);
  CHECK(maxabs(k0.block(n, 0, n, n) + 0.7 * Mat::Identity(n, n)) == 0.0);
}

TEST_CASE("block_matrices: trivariate lower triangle fills exactly six blocks") {
  auto fem = assemble_fem(build_mesh(Rectangle{0, 0, 1, 1}, 0.5));
  const int n = fem.n_vertices;

  SpdeSystemSpec s;
  s.field_count = 3;
  s.alpha.resize(3, 3);
  s.alpha << 2, 0, 0, 2, 2, 0, 2, 2, 2;
  s.kappa.resize(3, 3);
  s.kappa << 0.5, 0, 0, 0.6, 0.4, 0, 0.5, 1.0, 0.3;
  s.b.resize(3, 3);
  s.b << 1.0, 0, 0, 0.8, 1.0, 0, 1.0, 0.9, 1.0;
  s.noise_alpha.resize(3);
  s.noise_alpha << 1, 1, 1;
  s.noise_kappa.resize(3);
  s.noise_kappa << 0.5, 0.4, 0.3;

  Mat k = Mat(block_matrices(s, fem).k_block);
  int nonzero_blocks = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      bool nz = maxabs(k.block(i * n, j * n, n, n)) > 0.0;
      nonzero_blocks += nz;
      CHECK(nz == (j <= i));
    }
  CHECK(nonzero_blocks == 6);
}

TEST_CASE("build_precision: single field with white noise collapses to K Ct^-1 K") {
  auto fem = assemble_fem(build_mesh(Rectangle{0, 0, 1, 1}, 0.4));
  SpdeSystemSpec s;
  s.field_count = 1;
  s.alpha.resize(1, 1);
  s.alpha << 2;
  s.kappa.resize(1, 1);
  s.kappa << 1.3;
  s.b.resize(1, 1);
  s.b << 1.0;
  s.noise_alpha.resize(1);
  s.noise_alpha << 0;
  s.noise_kappa.resize(1);
  s.noise_kappa << 0.0;

  Mat q = Mat(build_precision(s, fem).q);
  Mat want = Mat(noise_precision(fem, 2, 1.3));
  CHECK(rel_err(q, want) <= 1e-12);
}

TEST_CASE("build_precision: dense solve of the discretized system gives the same covariance") {
  auto fem = assemble_fem(build_mesh(Rectangle{0, 0, 1, 1}, 0.05));
  auto spec = table_like_spec();
  auto gmrf = build_precision(spec, fem);

  Mat cov_sparse_route = Mat(gmrf.q).inverse();

  auto sys = block_matrices(spec, fem);
  Mat kd = Mat(sys.k_block);
  Mat dd = Mat(sys.d);
  Mat qfd = Mat(sys.noise_q);
  Mat m = kd.partialPivLu().solve(dd);
  Mat cov_direct = m * qfd.ldlt().solve(m.transpose());

  CHECK(rel_err(cov_sparse_route, cov_direct) <= 1e-8);
}

TEST_CASE("build_precision: symmetry and positive definiteness") {
  auto fem = assemble_fem(build_mesh(Rectangle{0, 0, 2, 1}, 0.3));
  auto gmrf = build_precision(table_like_spec(), fem);
  SparseMat diff = SparseMat(gmrf.q - SparseMat(gmrf.q.transpose()));
  double asym = 0.0;
  for (int c = 0; c < diff.outerSize(); ++c)
    for (SparseMat::InnerIterator it(diff, c); it; ++it)
      asym = std::max(asym, std::abs(it.value()));
  CHECK(asym <= 1e-10);
  CHECK_NOTHROW(factorize(gmrf));
}

TEST_CASE("build_precision: invariant under vertex relabeling") {
  auto mesh = build_mesh(Rectangle{0, 0, 1, 1}, 0.25);
  const int n = mesh.n_vertices();

  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  PhiloxRng rng(5150);
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng.uniform() * (i + 1));
    std::swap(perm[i], perm[j]);
  }

  TriangulatedDomain shuffled;
  shuffled.vertices.resize(n);
  shuffled.boundary.resize(n);
  shuffled.extension_margin = mesh.extension_margin;
  for (int v = 0; v < n; ++v) {
    shuffled.vertices[perm[v]] = mesh.vertices[v];
    shuffled.boundary[perm[v]] = mesh.boundary[v];
  }
  for (auto tri : mesh.triangles)
    shuffled.triangles.push_back({perm[tri[0]], perm[tri[1]], perm[tri[2]]});

  auto spec = table_like_spec();
  Mat q1 = Mat(build_precision(spec, assemble_fem(mesh)).q);
  Mat q2 = Mat(build_precision(spec, assemble_fem(shuffled)).q);

  double worst = 0.0;
  for (int fi = 0; fi < 2; ++fi)
    for (int fj = 0; fj < 2; ++fj)
      for (int v = 0; v < n; ++v)
        for (int w = 0; w < n; ++w)
          worst = std::max(worst, std::abs(q1(fi * n + v, fj * n + w) -
                                           q2(fi * n + perm[v], fj * n + perm[w])));
  CHECK(worst <= 1e-12);
}

TEST_CASE("build_precision: nonzeros per row stay flat under refinement") {
  std::vector<double> ratios;
  for (double h : {0.05, 0.025, 0.0125}) {
    auto fem = assemble_fem(build_mesh(Rectangle{0, 0, 1, 1}, h));
    auto gmrf = build_precision(table_like_spec(), fem);
    ratios.push_back(static_cast<double>(gmrf.q.nonZeros()) / fem.n_vertices);
  }
  double lo = *std::min_element(ratios.begin(), ratios.end());
  double hi = *std::max_element(ratios.begin(), ratios.end());
  CHECK(hi / lo < 1.2);
}

TEST_CASE("spectral: operator symbol and noise spectrum closed forms") {
  CHECK(operator_symbol(2.5, 0.7, 0, 3.0) == 2.5);
  CHECK(operator_symbol(2.0, 0.5, 2, 1.5) == doctest::Approx(2.0 * (0.25 + 2.25)).epsilon(1e-15));
  CHECK(noise_spectrum(0, 0.0, 2, 4.0) == doctest::Approx(std::pow(2 * M_PI, -2)).epsilon(1e-15));
  CHECK(noise_spectrum(1, 0.4, 2, 1.0) ==
        doctest::Approx(std::pow(2 * M_PI, -2) / 1.16).epsilon(1e-12));
}

TEST_CASE("spectral: cross-to-marginal ratio equals the negated symbol ratio") {
  PhiloxRng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    double k11 = 0.2 + rng.uniform(), k21 = 0.2 + rng.uniform(), k22 = 0.2 + rng.uniform();
    double b11 = 0.5 + rng.uniform(), b22 = 0.5 + rng.uniform();
    double b21 = (rng.uniform() < 0.5 ? -1 : 1) * (0.3 + rng.uniform());
    int a21 = rng.uniform() < 0.5 ? 0 : 2;
    auto s = bivariate_spec(k11, k21, k22, b11, b21, b22, 2, a21, 2, 0, 0, k11, k22);
    for (int i = 0; i < 5; ++i) {
      double k = std::pow(10.0, -2.0 + 4.0 * rng.uniform());
      auto sp = power_spectrum_triangular(s, k);
      double h21 = b21 * (a21 == 0 ? 1.0 : (k21 * k21 + k * k));
      double h22 = b22 * (k22 * k22 + k * k);
      double want = -h21 / h22;
      CHECK(close_rel(sp(0, 1) / sp(0, 0), want, 1e-12));
    }
  }
}

TEST_CASE("spectral: decoupled system reduces to the univariate closed form") {
  auto s = bivariate_spec(0.8, 0.5, 1.1, 1.4, 0.0, 0.9, 2, 2, 2, 1, 0, 0.8, 1.1);
  for (double k : {0.01, 0.3, 2.0, 40.0}) {
    auto sp = power_spectrum_triangular(s, k);
    double sf1 = std::pow(2 * M_PI, -2) / (0.64 + k * k);
    double want11 = sf1 / (1.4 * 1.4 * std::pow(0.64 + k * k, 2));
    CHECK(close_rel(sp(0, 0), want11, 1e-12));
    CHECK(sp(0, 1) == 0.0);
    double sf2 = std::pow(2 * M_PI, -2);
    double want22 = sf2 / (0.81 * std::pow(1.21 + k * k, 2));
    CHECK(close_rel(sp(1, 1), want22, 1e-12));
  }
}

TEST_CASE("spectral: full spectrum matches the complex matrix identity") {
  SpdeSystemSpec s = bivariate_spec(0.6, 0.9, 0.4, 1.2, -0.8, 1.1, 2, 2, 2, 1, 0, 0.6, 0.4);
  s.b(0, 1) = 0.5;
  s.alpha(0, 1) = 0;
  s.kappa(0, 1) = 0.0;
  s.validate();

  for (auto [kx, ky] : std::vector<std::array<double, 2>>{
           {0.0, 0.0}, {0.7, 0.0}, {0.3, -1.2}, {5.0, 2.0}}) {
    double kn = std::hypot(kx, ky);
    Eigen::Matrix2cd h;
    h(0, 0) = operator_symbol(s.b(0, 0), s.kappa(0, 0), s.alpha(0, 0), kn);
    h(0, 1) = operator_symbol(s.b(0, 1), s.kappa(0, 1), s.alpha(0, 1), kn);
    h(1, 0) = operator_symbol(s.b(1, 0), s.kappa(1, 0), s.alpha(1, 0), kn);
    h(1, 1) = operator_symbol(s.b(1, 1), s.kappa(1, 1), s.alpha(1, 1), kn);
    Eigen::Matrix2cd sf = Eigen::Matrix2cd::Zero();
    sf(0, 0) = noise_spectrum(s.noise_alpha[0], s.noise_kappa[0], 2, kn);
    sf(1, 1) = noise_spectrum(s.noise_alpha[1], s.noise_kappa[1], 2, kn);
    Eigen::Matrix2cd hinv = h.inverse();
    Eigen::Matrix2cd want = hinv * sf * hinv.adjoint();

    auto got = power_spectrum_full(s, kx, ky);
    double scale = want.cwiseAbs().maxCoeff();
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        CHECK(std::abs(got(i, j) - want(i, j).real()) <= 1e-12 * scale);
        CHECK(std::abs(want(i, j).imag()) <= 1e-18 * scale);
      }
  }
}

TEST_CASE("spectral: triangular fast path agrees with the full form") {
  PhiloxRng rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    double k11 = 0.2 + rng.uniform();
    auto s = bivariate_spec(k11, 0.2 + rng.uniform(), 0.2 + rng.uniform(),
                            0.5 + rng.uniform(), -1.0 + 2.0 * rng.uniform(),
                            0.5 + rng.uniform(), 2, 2, 2, trial % 3 == 0 ? 1 : 0, 0,
                            k11, 0.2 + rng.uniform());
    double k = std::pow(10.0, -2.0 + 4.0 * rng.uniform());
    auto a = power_spectrum_triangular(s, k);
    auto b = power_spectrum_full(s, k, 0.0);
    CHECK(rel_err(a, b) <= 1e-12);
    CHECK(a(0, 1) == a(1, 0));

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(a);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12 * a.trace());
  }
}

TEST_CASE("spectral: upper coupling rejected by the triangular form, singular symbol detected") {
  auto s = table_like_spec();
  s.b(0, 1) = 0.3;
  s.validate();
  CHECK_THROWS_AS(power_spectrum_triangular(s, 1.0), config_error);

  SpdeSystemSpec sing = bivariate_spec(0, 0, 0, 1.0, 1.0, 1.0, 0, 0, 0, 0, 0, 0, 0);
  sing.b(0, 1) = 1.0;
  sing.validate();
  CHECK_THROWS_AS(power_spectrum_full(sing, 0.5, 0.5), numeric_error);
}

TEST_CASE("matern_spectrum: agrees with the transformed correlation and integrates to sigma2") {
  CHECK(matern_spectrum(1.0, 1.0, 1.0, 2, 0.0) == doctest::Approx(1.0 / M_PI).epsilon(1e-14));
  CHECK_THROWS_AS(matern_spectrum(0.0, 1.0, 1.0, 2, 0.0), config_error);

  const double sigma2 = 1.7, a = 1.2;
  for (double nu : {0.5, 1.0, 2.0}) {
    for (double k : {0.0, 0.5, 1.3, 3.0}) {
      double want = hankel_spectrum(sigma2, nu, a, k);
      CHECK(close_rel(matern_spectrum(sigma2, nu, a, 2, k), want, 1e-3));
    }

    // Radial integral of the spectrum over the plane, exact tail appended.
    const double kmax = 400.0;
    const int n = 200000;
    double acc = 0.0;
    for (int i = 1; i <= n; ++i) {
      double k = kmax * i / n;
      double w = (i == n) ? 0.5 : 1.0;
      acc += w * k * matern_spectrum(sigma2, nu, a, 2, k);
    }
    double integral = 2.0 * M_PI * acc * (kmax / n);
    double tail = sigma2 * std::pow(a * a / (a * a + kmax * kmax), nu);
    CHECK(close_rel(integral + tail, sigma2, 1e-4));
  }
}

TEST_CASE("match_parameters: closed-form marginals in the balanced case") {
  auto m = match_parameters(matching_spec(0.0));
  CHECK(m.nu11 == 1.0);
  CHECK(m.sigma1 == doctest::Approx(std::sqrt(1.0 / (4.0 * M_PI))).epsilon(1e-14));
  CHECK(m.rho12 == 0.0);

  auto m2 = match_parameters(matching_spec(-1.0));
  CHECK(m2.sigma1 == doctest::Approx(0.28209479177387814).epsilon(1e-14));
  CHECK(m2.sigma2 == doctest::Approx(0.3989422804014327).epsilon(1e-14));
  CHECK(m2.rho12 == doctest::Approx(0.7071067811865475).epsilon(1e-14));
  CHECK(m2.nu11 == 1.0);
  CHECK(m2.nu12 == 1.0);
  CHECK(m2.nu22 == 1.0);
}

TEST_CASE("match_parameters: coefficient ratios at equal smoothness") {
  PhiloxRng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    double b11 = 0.4 + rng.uniform(), b22 = 0.4 + rng.uniform();
    double b21 = (rng.uniform() < 0.5 ? -1 : 1) * (0.2 + rng.uniform());
    auto s = matching_spec(0.0, 0.9);
    s.b(0, 0) = b11;
    s.b(1, 0) = b21;
    s.b(1, 1) = b22;
    auto m = match_parameters(s);
    CHECK(-b22 / b21 == doctest::Approx(m.sigma1 / (m.rho12 * m.sigma2)).epsilon(1e-12));
    CHECK(b22 * b22 / (b11 * b11 + b21 * b21) ==
          doctest::Approx((m.sigma1 * m.sigma1) / (m.sigma2 * m.sigma2)).epsilon(1e-12));
  }
}

TEST_CASE("match_parameters: the two smoothness branches coincide at the crossover") {
  auto s = matching_spec(-0.8);
  auto m = match_parameters(s);
  double d = 2.0;
  double from_le = s.noise_alpha[1] + s.alpha(1, 1) - d / 2.0;
  double from_ge = s.alpha(0, 0) + s.alpha(1, 1) + s.noise_alpha[0] - s.alpha(1, 0) - d / 2.0;
  CHECK(from_le == from_ge);
  CHECK(m.nu22 == from_le);
}

TEST_CASE("match_parameters: rejects mixed scales") {
  auto s = table_like_spec();
  CHECK_THROWS_AS(match_parameters(s), config_error);

  auto white_mismatch = matching_spec(-1.0);
  white_mismatch.noise_alpha << 1, 0;
  white_mismatch.noise_kappa << 2.0, 1.0;
  CHECK_THROWS_AS(match_parameters(white_mismatch), config_error);
}

TEST_CASE("match_parameters: cross-correlation sign is minus the sign of b21 b22") {
  PhiloxRng rng(123);
  int checked = 0;
  while (checked < 1000) {
    int a11 = 2;
    int a21 = rng.uniform() < 0.5 ? 0 : 2;
    int a22 = 2;
    int an1 = static_cast<int>(rng.uniform() * 3.0);
    int an2 = static_cast<int>(rng.uniform() * 3.0);
    double kappa = 0.3 + 2.0 * rng.uniform();
    double b11 = (rng.uniform() < 0.5 ? -1 : 1) * (0.3 + rng.uniform());
    double b22 = (rng.uniform() < 0.5 ? -1 : 1) * (0.3 + rng.uniform());
    double b21 = (rng.uniform() < 0.5 ? -1 : 1) * (0.3 + rng.uniform());
    auto s = bivariate_spec(kappa, kappa, kappa, b11, b21, b22, a11, a21, a22, an1, an2,
                            kappa, kappa);
    MatchedMaternParams m;
    try {
      m = match_parameters(s);
    } catch (const config_error&) {
      continue;  // draw produced a nonpositive matched smoothness
    }
    ++checked;
    double want = -(b21 * b22 > 0 ? 1.0 : -1.0);
    CHECK((m.rho12 > 0 ? 1.0 : -1.0) == want);
    CHECK(m.rho12 != 0.0);
  }
}

TEST_CASE("match_parameters: matched spectra reproduce the system spectra") {
  auto s = matching_spec(-1.0);
  auto m = match_parameters(s);
  for (int i = 0; i < 100; ++i) {
    double k = std::pow(10.0, -2.0 + 4.0 * i / 99.0);
    auto sp = power_spectrum_triangular(s, k);
    double s11 = matern_spectrum(m.sigma1 * m.sigma1, m.nu11, m.a, 2, k);
    double s22 = matern_spectrum(m.sigma2 * m.sigma2, m.nu22, m.a, 2, k);
    double s12 = m.rho12 * m.sigma1 * m.sigma2 * matern_spectrum(1.0, m.nu12, m.a, 2, k);
    CHECK(close_rel(sp(0, 0), s11, 1e-8));
    CHECK(close_rel(sp(1, 1), s22, 1e-8));
    CHECK(close_rel(sp(0, 1), s12, 1e-8));
  }
}

TEST_CASE("matern_correlation: unit at zero, exponential at nu one-half") {
  for (double nu : {0.5, 1.0, 2.5}) CHECK(matern_correlation(0.0, nu, 1.3) == 1.0);
  for (double h = 0.1; h < 5.0; h += 0.3)
    CHECK(close_rel(matern_correlation(h, 0.5, 0.8), std::exp(-0.8 * h), 1e-12));
  CHECK_THROWS_AS(matern_correlation(1.0, 0.0, 1.0), config_error);
  CHECK_THROWS_AS(matern_correlation(-1.0, 1.0, 1.0), config_error);
}

TEST_CASE("matern_correlation: Bessel route agrees with the GSL evaluation") {
  CHECK(matern_correlation(2.0, 1.0, 1.0) == doctest::Approx(0.27973176363304524).epsilon(1e-12));
  CHECK(matern_correlation(2.0, 1.0, 1.0) ==
        doctest::Approx(2.0 * gsl_sf_bessel_Knu(1.0, 2.0)).epsilon(1e-12));

  PhiloxRng rng(8);
  for (int i = 0; i < 200; ++i) {
    double nu = 0.3 + 3.7 * rng.uniform();
    double x = 0.05 + 10.0 * rng.uniform();
    double want = std::pow(2.0, 1.0 - nu) / gsl_sf_gamma(nu) * std::pow(x, nu) *
                  gsl_sf_bessel_Knu(nu, x);
    CHECK(close_rel(matern_correlation(x, nu, 1.0), want, 1e-10));
  }
}

TEST_CASE("effective_range: closed form and the correlation level it implies") {
  CHECK(effective_range(0.5, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(effective_range(1.0, 2.0) == doctest::Approx(std::sqrt(8.0) / 2.0).epsilon(1e-15));
  for (double nu : {0.5, 1.0, 1.5, 2.0}) {
    double r = effective_range(nu, 1.7);
    double c = matern_correlation(r, nu, 1.7);
    CHECK(c >= 0.12);
    CHECK(c <= 0.15);
  }
}

TEST_CASE("assemble_covariance: co-located block and long-range decay") {
  MaternCrossCovariance model = parsimonious_matern(
      (Vec(2) << 2.0, 3.0).finished(), (Vec(2) << 1.0, 1.5).finished(), 1.0,
      (Mat(2, 2) << 1.0, -0.5, -0.5, 1.0).finished());

  Mat colocated = assemble_covariance(model, {{0.4, 0.2}, {0.4, 0.2}}, {0, 1});
  Mat want(2, 2);
  want << 4.0, -3.0, -3.0, 9.0;
  CHECK(maxabs(colocated - want) <= 1e-12);

  double far = 10.0 * effective_range(1.0, 1.0);
  Mat distant = assemble_covariance(model, {{0.0, 0.0}, {far, 0.0}}, {0, 1}, false);
  CHECK(std::abs(distant(0, 1)) <= 1e-6);
}

TEST_CASE("assemble_covariance: overly strong cross-correlation fails validation") {
  std::vector<std::array<double, 2>> locs;
  std::vector<int> fields;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      for (int f = 0; f < 2; ++f) {
        locs.push_back({0.35 * i, 0.35 * j});
        fields.push_back(f);
      }

  auto model_at = [](double rho) {
    return parsimonious_matern((Vec(2) << 1.0, 1.0).finished(),
                               (Vec(2) << 0.5, 2.5).finished(), 1.0,
                               (Mat(2, 2) << 1.0, rho, rho, 1.0).finished());
  };
  CHECK_NOTHROW(assemble_covariance(model_at(0.3), locs, fields));
  CHECK_THROWS_AS(assemble_covariance(model_at(0.99), locs, fields), numeric_error);
}

TEST_CASE("dense_krige: prior at empty data, interpolation and cross-field borrowing") {
  MaternCrossCovariance model = parsimonious_matern(
      (Vec(2) << 1.5, 0.8).finished(), (Vec(2) << 1.0, 1.0).finished(), 1.0,
      (Mat(2, 2) << 1.0, -0.9, -0.9, 1.0).finished());

  TriangulatedDomain mesh = build_mesh(Rectangle{-2, -2, 2, 2}, 0.5);
  Vec nugget = (Vec(2) << 1e-12, 1e-12).finished();

  ObservationSet empty = make_observations(mesh, 2, {}, {}, {}, Vec(), nugget, nullptr);
  auto prior = dense_krige(model, empty, {{0.0, 0.0}, {0.5, 0.5}}, {0, 1});
  CHECK(prior.mean.cwiseAbs().maxCoeff() == 0.0);
  CHECK(prior.variance[0] == doctest::Approx(1.5 * 1.5).epsilon(1e-14));
  CHECK(prior.variance[1] == doctest::Approx(0.8 * 0.8).epsilon(1e-14));

  ObservationSet one = make_observations(mesh, 2, {0.0}, {0.0}, {0},
                                         (Vec(1) << 2.0).finished(), nugget, nullptr);
  auto at_obs = dense_krige(model, one, {{0.0, 0.0}, {0.0, 0.0}}, {0, 1});
  CHECK(at_obs.mean[0] == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(at_obs.variance[0] <= 1e-6);

  // Conditioning field 2 on a field-1 value: 2x2 normal conditional.
  double c11 = 1.5 * 1.5 + 1e-12, c21 = -0.9 * 1.5 * 0.8;
  CHECK(at_obs.mean[1] == doctest::Approx(c21 / c11 * 2.0).epsilon(1e-6));
  CHECK(at_obs.mean[1] < 0.0);
}

TEST_CASE("dense_krige and likelihood match an inline dense implementation") {
  MaternCrossCovariance model = parsimonious_matern(
      (Vec(2) << 1.2, 0.9).finished(), (Vec(2) << 0.8, 1.4).finished(), 1.3,
      (Mat(2, 2) << 1.0, 0.4, 0.4, 1.0).finished());

  TriangulatedDomain mesh = build_mesh(Rectangle{0, 0, 3, 3}, 0.5);
  PhiloxRng rng(99);
  std::vector<double> x, y;
  std::vector<int> fields;
  Vec values(14);
  for (int i = 0; i < 14; ++i) {
    x.push_back(3.0 * rng.uniform());
    y.push_back(3.0 * rng.uniform());
    fields.push_back(i % 2);
    values[i] = 2.0 * rng.uniform() - 1.0;
  }
  Vec nugget = (Vec(2) << 0.05, 0.1).finished();
  auto obs = make_observations(mesh, 2, x, y, fields, values, nugget, nullptr);

  std::vector<std::array<double, 2>> targets = {{1.0, 1.0}, {2.2, 0.7}, {0.3, 2.8}};
  std::vector<int> target_fields = {0, 1, 0};
  auto got = dense_krige(model, obs, targets, target_fields);

  std::vector<std::array<double, 2>> obs_locs;
  for (int r = 0; r < obs.size(); ++r) obs_locs.push_back({obs.x[r], obs.y[r]});
  Mat coo = assemble_covariance(model, obs_locs, obs.field_of, false);
  for (int r = 0; r < obs.size(); ++r) coo(r, r) += nugget[obs.field_of[r]];

  auto all_locs = obs_locs;
  auto all_fields = obs.field_of;
  for (size_t t = 0; t < targets.size(); ++t) {
    all_locs.push_back(targets[t]);
    all_fields.push_back(target_fields[t]);
  }
  Mat full = assemble_covariance(model, all_locs, all_fields, false);
  Mat cto = full.block(obs.size(), 0, targets.size(), obs.size());
  Mat ctt = full.block(obs.size(), obs.size(), targets.size(), targets.size());

  Vec mean = cto * coo.ldlt().solve(obs.value);
  Mat cond = ctt - cto * coo.ldlt().solve(cto.transpose());
  for (size_t t = 0; t < targets.size(); ++t) {
    CHECK(got.mean[t] == doctest::Approx(mean[t]).epsilon(1e-10));
    CHECK(got.variance[t] == doctest::Approx(cond(t, t)).epsilon(1e-10));
  }

  double logdet = 0.0;
  Eigen::LLT<Mat> llt(coo);
  for (int i = 0; i < obs.size(); ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  double want_ll =
      -0.5 * (logdet + obs.value.dot(coo.ldlt().solve(obs.value)) +
              obs.size() * std::log(2.0 * M_PI));
  CHECK(matern_log_likelihood(model, obs) == doctest::Approx(want_ll).epsilon(1e-10));
}

TEST_CASE("conditional means from the sparse and dense routes agree in the matching regime") {
  auto spec = matching_spec(-1.0);
  auto mesh = build_mesh(Rectangle{0, 0, 6, 6}, 0.3, 1.8);
  auto fem = assemble_fem(mesh);
  auto gmrf = build_precision(spec, fem);
  auto factor = factorize(gmrf);

  Vec field = sample(factor, Vec::Zero(gmrf.q.rows()), 424242);

  PointLocator locator(mesh);
  PhiloxRng rng(5);
  std::vector<double> x, y;
  std::vector<int> fields;
  std::vector<double> values;
  for (int i = 0; i < 40; ++i) {
    double px = 1.0 + 4.0 * rng.uniform();
    double py = 1.0 + 4.0 * rng.uniform();
    auto loc = locator.locate(px, py);
    REQUIRE(loc.inside());
    for (int f = 0; f < 2; ++f) {
      double v = 0.0;
      for (int k = 0; k < 3; ++k)
        v += loc.weight[k] * field[f * fem.n_vertices + loc.vertex[k]];
      x.push_back(px);
      y.push_back(py);
      fields.push_back(f);
      values.push_back(v);
    }
  }
  Vec vals = Eigen::Map<Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
  Vec nugget = (Vec(2) << 1e-4, 1e-4).finished();
  auto obs = make_observations(mesh, 2, x, y, fields, vals, nugget, nullptr);
  auto posterior = condition(gmrf, obs);

  auto matched = match_parameters(spec);
  MaternCrossCovariance dense_model = parsimonious_matern(
      (Vec(2) << matched.sigma1, matched.sigma2).finished(),
      (Vec(2) << matched.nu11, matched.nu22).finished(), matched.a,
      (Mat(2, 2) << 1.0, matched.rho12, matched.rho12, 1.0).finished());

  std::vector<std::array<double, 2>> targets;
  std::vector<int> target_fields;
  PhiloxRng trng(6);
  for (int i = 0; i < 20; ++i) {
    targets.push_back({1.5 + 3.0 * trng.uniform(), 1.5 + 3.0 * trng.uniform()});
    target_fields.push_back(i % 2);
  }
  auto dense = dense_krige(dense_model, obs, targets, target_fields);

  Vec sparse_means(targets.size());
  for (size_t t = 0; t < targets.size(); ++t) {
    auto loc = locator.locate(targets[t][0], targets[t][1]);
    REQUIRE(loc.inside());
    double v = 0.0;
    for (int k = 0; k < 3; ++k)
      v += loc.weight[k] *
           posterior.mean[target_fields[t] * fem.n_vertices + loc.vertex[k]];
    sparse_means[static_cast<Eigen::Index>(t)] = v;
  }

  CHECK((sparse_means - dense.mean).norm() / sparse_means.norm() <= 0.05);
}
