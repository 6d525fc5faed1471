#include <benchmark/benchmark.h>

#include <random>

#include "mlnc/graph.hpp"
#include "mlnc/metrics.hpp"
#include "mlnc/synthetic.hpp"
#include "mlnc/tensor.hpp"

namespace {

using namespace mlnc;

Tensor2 random_tensor(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor2 t(rows, cols);
  for (double& v : t.data()) v = n(rng);
  return t;
}

Graph planted_graph(std::size_t nodes) {
  SyntheticSpec s;
  s.num_nodes = nodes;
  return generate_synthetic(s, 1);
}

void BM_NormalizeAdjacency(benchmark::State& state) {
  const Graph g = planted_graph(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(normalize_adjacency(g));
  state.counters["arcs"] = static_cast<double>(g.num_arcs());
}
BENCHMARK(BM_NormalizeAdjacency)->Arg(600)->Arg(3000)->Unit(benchmark::kMicrosecond);

void BM_Spmm(benchmark::State& state) {
  const Graph g = planted_graph(static_cast<std::size_t>(state.range(0)));
  const NormalizedAdjacency adj = normalize_adjacency(g);
  const Tensor2 x = random_tensor(g.num_nodes(), static_cast<std::size_t>(state.range(1)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(spmm(adj, x));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(adj.structure.num_entries()) *
                          state.range(1));
}
BENCHMARK(BM_Spmm)->Args({600, 64})->Args({3000, 64})->Args({3000, 256})->Unit(benchmark::kMicrosecond);

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const Tensor2 a = random_tensor(n, k, 3);
  const Tensor2 b = random_tensor(k, k, 4);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * k * k));
}
BENCHMARK(BM_Matmul)->Args({600, 64})->Args({3000, 64})->Args({3000, 256})->Unit(benchmark::kMicrosecond);

void BM_ComputeMetrics(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t cols = 14;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EvalBatch b{Tensor2(rows, cols), Tensor2(rows, cols)};
  for (std::size_t i = 0; i < b.scores.size(); ++i) {
    b.scores.data()[i] = u(rng);
    b.truth.data()[i] = u(rng) < 0.2 ? 1.0 : 0.0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(compute_metrics(b));
}
BENCHMARK(BM_ComputeMetrics)->Arg(621)->Arg(5000)->Unit(benchmark::kMicrosecond);

}  // namespace
