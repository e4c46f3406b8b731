// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include "relucode/parallel.hpp"
#include "relucode/tessellation.hpp"
#include "test_support.hpp"

using namespace relucode;

namespace {

const ReluNetwork& bench_net() {
  static const ReluNetwork net = [] {
    Rng rng(1);
    return relucode::testing::random_network(rng, 2, {64, 64, 32});
  }();
  return net;
}

PointMatrix bench_points(std::size_t n) {
  Rng rng(2);
  PointMatrix pts(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = rng.uniform(-3, 3);
  return pts;
}

std::vector<Code> bench_codes(std::size_t n) {
  const auto packed = codes_of_batch(bench_net(), bench_points(n));
  std::vector<Code> out;
  for (std::size_t i = 0; i < packed.size(); ++i) out.push_back(packed.code(i));
  return out;
}

void BM_codes_parallel(benchmark::State& state) {
  const auto pts = bench_points(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(codes_of_batch(bench_net(), pts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_codes_reference(benchmark::State& state) {
  const auto pts = bench_points(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::codes_of_batch(bench_net(), pts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_distances_parallel(benchmark::State& state) {
  const auto packed = pack(bench_codes(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(pairwise_distances(packed, Threshold::infinite()));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_distances_reference(benchmark::State& state) {
  const auto codes = bench_codes(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(reference::pairwise_distances(codes, Threshold::infinite()));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_neighbors_parallel(benchmark::State& state) {
  const auto packed = pack(bench_codes(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(unit_distance_neighbors(packed));
}

void BM_neighbors_reference(benchmark::State& state) {
  const auto codes = bench_codes(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(reference::unit_distance_neighbors(codes));
}

const std::array<std::pair<double, double>, 2> kBox{{{-3, 3}, {-3, 3}}};

void BM_grid_parallel(benchmark::State& state) {
  const auto res = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(grid_tessellation(bench_net(), kBox, res));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_grid_reference(benchmark::State& state) {
  const auto res = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(reference::grid_tessellation(bench_net(), kBox, res));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

}  // namespace

BENCHMARK(BM_codes_parallel)->Arg(10000)->Arg(100000);
BENCHMARK(BM_codes_reference)->Arg(10000)->Arg(100000);
BENCHMARK(BM_distances_parallel)->Arg(1000)->Arg(4000);
BENCHMARK(BM_distances_reference)->Arg(1000)->Arg(4000);
BENCHMARK(BM_neighbors_parallel)->Arg(2000);
BENCHMARK(BM_neighbors_reference)->Arg(2000);
BENCHMARK(BM_grid_parallel)->Arg(256)->Arg(1000);
BENCHMARK(BM_grid_reference)->Arg(256)->Arg(1000);

BENCHMARK_MAIN();
