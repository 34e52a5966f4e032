// OpenMP kernels against their serial references, plus whole-pipeline
// clustering timings. Run with --benchmark_filter=Cluster/20000 for the
// large-n budget check.

#include <benchmark/benchmark.h>

#include <vector>

#include "intentflow/hdbscan.hpp"
#include "intentflow/kernels.hpp"
#include "intentflow/random.hpp"

using namespace intentflow;

namespace {

Matrix points(std::size_t n, std::size_t dim) {
  Rng rng(n * 31 + dim);
  std::vector<double> v(n * dim);
  for (double& x : v) x = standard_normal(rng);
  return Matrix(n, dim, std::move(v));
}

std::vector<int> labels(std::size_t n, int k) {
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<int>(i % static_cast<std::size_t>(k + 1)) - 1;
  return out;
}

template <bool Parallel>
void BM_Knn(benchmark::State& state) {
  const Matrix m = points(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? kernels::knn(m, 15, Metric::cosine)
                                      : kernels::serial::knn(m, 15, Metric::cosine));
}

template <bool Parallel>
void BM_CoreDistance(benchmark::State& state) {
  const Matrix m = points(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? kernels::kth_neighbor_distance(m, 10)
                                      : kernels::serial::kth_neighbor_distance(m, 10));
}

template <bool Parallel>
void BM_Mst(benchmark::State& state) {
  const Matrix m = points(static_cast<std::size_t>(state.range(0)), 5);
  const auto core = kernels::kth_neighbor_distance(m, 10);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? kernels::mutual_reachability_mst(m, core)
                                      : kernels::serial::mutual_reachability_mst(m, core));
}

template <bool Parallel>
void BM_Separation(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const Matrix m = points(n, 5);
  const auto core = kernels::kth_neighbor_distance(m, 10);
  const auto l = labels(n, 8);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? kernels::cluster_separation(m, l, core, 8)
                                      : kernels::serial::cluster_separation(m, l, core, 8));
}

template <bool Parallel>
void BM_AllPointsCore(benchmark::State& state) {
  const Matrix m = points(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? kernels::all_points_core_distance(m)
                                      : kernels::serial::all_points_core_distance(m));
}

void BM_Cluster(benchmark::State& state) {
  const Matrix m = points(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(hdbscan::cluster(m, {50, 10}));
}

}  // namespace

#define KERNEL(fn)                                                                               \
  BENCHMARK(fn<false>)->Name(#fn "/serial")->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond); \
  BENCHMARK(fn<true>)->Name(#fn "/openmp")->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond)

KERNEL(BM_Knn);
KERNEL(BM_CoreDistance);
KERNEL(BM_Mst);
KERNEL(BM_Separation);
KERNEL(BM_AllPointsCore);

BENCHMARK(BM_Cluster)->Arg(2000)->Arg(20000)->Iterations(1)->Unit(benchmark::kSecond);

BENCHMARK_MAIN();
