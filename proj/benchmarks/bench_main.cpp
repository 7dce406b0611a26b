#include <benchmark/benchmark.h>

#include "mgmrf/fem.hpp"
#include "mgmrf/gmrf.hpp"
#include "mgmrf/inference.hpp"
#include "mgmrf/mesh.hpp"
#include "mgmrf/precision.hpp"
#include "mgmrf/rng.hpp"

namespace {

using namespace mgmrf;

SpdeSystemSpec bivariate_spec() {
  SpdeSystemSpec spec;
  spec.field_count = 2;
  spec.alpha.resize(2, 2);
  spec.alpha << 2, 0, 2, 2;
  spec.kappa.resize(2, 2);
  spec.kappa << 0.15, 0.0, 0.5, 0.3;
  spec.b.resize(2, 2);
  spec.b << 1.0, 0.0, -1.0, 1.0;
  spec.noise_alpha.resize(2);
  spec.noise_alpha << 0, 0;
  spec.noise_kappa.resize(2);
  spec.noise_kappa << 0.15, 0.3;
  return spec;
}

TriangulatedDomain bench_mesh(double edge) {
  return build_mesh(Rectangle{0.0, 0.0, 10.0, 10.0}, edge, 1.0);
}

void BM_AssembleFem(benchmark::State& state) {
  const TriangulatedDomain mesh = bench_mesh(0.25);
  for (auto _ : state) benchmark::DoNotOptimize(assemble_fem(mesh));
}
BENCHMARK(BM_AssembleFem);

void BM_BuildPrecision(benchmark::State& state) {
  const TriangulatedDomain mesh = bench_mesh(0.25);
  const FemMatrices fem = assemble_fem(mesh);
  const SpdeSystemSpec spec = bivariate_spec();
  for (auto _ : state) benchmark::DoNotOptimize(build_precision(spec, fem));
}
BENCHMARK(BM_BuildPrecision);

void BM_Factorize(benchmark::State& state) {
  const TriangulatedDomain mesh = bench_mesh(0.25);
  const FemMatrices fem = assemble_fem(mesh);
  const MultivariateGmrf gmrf = build_precision(bivariate_spec(), fem);
  for (auto _ : state) {
    CholeskyFactor factor(gmrf.q);
    benchmark::DoNotOptimize(factor.log_det());
  }
}
BENCHMARK(BM_Factorize);

void BM_SampleDraw(benchmark::State& state) {
  const TriangulatedDomain mesh = bench_mesh(0.25);
  const FemMatrices fem = assemble_fem(mesh);
  const MultivariateGmrf gmrf = build_precision(bivariate_spec(), fem);
  const CholeskyFactor factor(gmrf.q);
  const Vec mean = Vec::Zero(gmrf.q.rows());
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample(factor, mean, seed++));
}
BENCHMARK(BM_SampleDraw);

void BM_LogPosterior(benchmark::State& state) {
  const TriangulatedDomain mesh = bench_mesh(0.5);
  const FemMatrices fem = assemble_fem(mesh);
  const SpdeSystemSpec spec = bivariate_spec();
  const MultivariateGmrf gmrf = build_precision(spec, fem);
  const CholeskyFactor factor(gmrf.q);
  const Vec draw = sample(factor, Vec::Zero(gmrf.q.rows()), 7);

  const int n_obs = 200;
  PhiloxRng rng(11);
  std::vector<double> x, y;
  std::vector<int> field_of;
  Vec value(n_obs);
  PointLocator locator(mesh);
  const int n = mesh.n_vertices();
  for (int r = 0; r < n_obs; ++r) {
    x.push_back(10.0 * rng.uniform());
    y.push_back(10.0 * rng.uniform());
    field_of.push_back(r % 2);
    auto loc = locator.locate(x.back(), y.back());
    double v = 0.0;
    for (int k = 0; k < 3; ++k)
      v += loc.weight[k] * draw[field_of.back() * n + loc.vertex[k]];
    value[r] = v + 0.01 * rng.normal();
  }
  const ObservationSet obs = make_observations(mesh, 2, x, y, field_of, value,
                                               Vec::Constant(2, 1e-4));

  FitConfig config;
  config.base = spec;
  config.free_kappa = {{0, 0}, {1, 0}, {1, 1}};
  config.free_b = {{1, 0}};
  const Vec packed = pack_parameters(config, spec);
  for (auto _ : state)
    benchmark::DoNotOptimize(log_posterior(config, fem, obs, packed).value);
}
BENCHMARK(BM_LogPosterior);

}  // namespace

BENCHMARK_MAIN();
