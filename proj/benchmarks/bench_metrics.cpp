#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "fp/codebook.hpp"
#include "fp/geometry.hpp"
#include "fp/metrics.hpp"
#include "fp/rng.hpp"
#include "fp/transport.hpp"

namespace {

fp::Codebook make_codebook(Eigen::Index k, Eigen::Index d, std::uint64_t seed) {
  fp::Rng rng(seed);
  fp::Codebook cb;
  cb.k = k;
  cb.centroids.resize(k, d);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < d; ++j) cb.centroids(i, j) = rng.normal();
  cb.assignment.assign(static_cast<std::size_t>(k), 0);
  return cb;
}

fp::Histogram make_hist(Eigen::Index k, std::uint64_t seed) {
  fp::Rng rng(seed);
  Eigen::VectorXd v(k);
  for (Eigen::Index i = 0; i < k; ++i) v[i] = rng.uniform() + 1e-9;
  return fp::Histogram{v / v.sum()};
}

void BM_gdd(benchmark::State& state) {
  const Eigen::Index k = state.range(0);
  const fp::Codebook cb = make_codebook(k, 8, 1);
  const fp::Histogram f = make_hist(k, 2);
  const fp::Histogram g = make_hist(k, 3);
  for (auto _ : state) benchmark::DoNotOptimize(fp::gdd(f, g, cb));
  state.SetComplexityN(k);
}
BENCHMARK(BM_gdd)->RangeMultiplier(4)->Range(16, 4096)->Complexity(benchmark::oN);

void BM_emd(benchmark::State& state) {
  const Eigen::Index k = state.range(0);
  const fp::Codebook cb = make_codebook(k, 8, 1);
  const Eigen::MatrixXd ground = fp::centroid_ground(cb);
  const fp::Histogram f = make_hist(k, 2);
  const fp::Histogram g = make_hist(k, 3);
  for (auto _ : state) benchmark::DoNotOptimize(fp::emd(f, g, ground));
  state.SetComplexityN(k);
}
BENCHMARK(BM_emd)->RangeMultiplier(4)->Range(16, 256)->Complexity();

void BM_diffusion_map(benchmark::State& state) {
  const Eigen::Index m = state.range(0);
  fp::Rng rng(4);
  fp::AffinityMatrix aff;
  aff.bandwidth_eps = 1.0;
  aff.w.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    aff.w(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      aff.w(i, j) = rng.uniform(0.1, 1.0);
      aff.w(j, i) = aff.w(i, j);
    }
  }
  const fp::MarkovMatrix markov = fp::renormalize(aff, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(fp::diffusion_map(markov, 10, 1));
}
BENCHMARK(BM_diffusion_map)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_kmeans(benchmark::State& state) {
  fp::Rng rng(5);
  fp::DiffusionMap map;
  map.d = 8;
  map.t = 1;
  map.coords.resize(1000, 8);
  for (Eigen::Index i = 0; i < 1000; ++i)
    for (Eigen::Index j = 0; j < 8; ++j) map.coords(i, j) = rng.normal();
  map.eigenvalues = Eigen::VectorXd::Ones(9);
  for (auto _ : state)
    benchmark::DoNotOptimize(fp::diffusion_kmeans(map, state.range(0), 7));
}
BENCHMARK(BM_kmeans)->Arg(100)->Arg(250)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
