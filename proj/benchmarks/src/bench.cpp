// Microbenchmarks for the hot paths: the shared-trajectory horizon gradient,
// the linear-chain closed forms, and the memory accountant.

#include <benchmark/benchmark.h>

#include "mpct/gradients.hpp"
#include "mpct/lintheory.hpp"
#include "mpct/numerics.hpp"
#include "mpct/trainer.hpp"

using namespace mpct;

namespace {

void BM_horizon_gradient(benchmark::State& state) {
  const std::size_t depth = static_cast<std::size_t>(state.range(0));
  const std::size_t h = static_cast<std::size_t>(state.range(1));
  const Network net = make_res_mlp(depth, 10, 4, 1);
  SeededRng rng(2);
  const Matrix x0 = gaussian_matrix(100, 10, 1.0, rng);
  const Matrix y = gaussian_matrix(100, 4, 1.0, rng);
  const Activations acts = forward(net, x0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(horizon_gradient(net, acts, y, h));
  }
}
BENCHMARK(BM_horizon_gradient)->Args({15, 1})->Args({15, 8})->Args({15, 15});

void BM_forward(benchmark::State& state) {
  const Network net = make_res_mlp(static_cast<std::size_t>(state.range(0)), 10, 4, 1);
  SeededRng rng(2);
  const Matrix x0 = gaussian_matrix(100, 10, 1.0, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(net, x0));
  }
}
BENCHMARK(BM_forward)->Arg(15)->Arg(30);

void BM_closed_form_gradient(benchmark::State& state) {
  SeededRng rng(3);
  const LinearChain chain =
      make_theorem_chain(8, static_cast<std::size_t>(state.range(0)), 1.0, rng);
  for (auto _ : state) {
    for (std::size_t t = 0; t < chain.depth; ++t)
      benchmark::DoNotOptimize(closed_form_gradient(chain, t, chain.depth / 2));
  }
}
BENCHMARK(BM_closed_form_gradient)->Arg(50)->Arg(100);

void BM_memory_estimate(benchmark::State& state) {
  const MemoryModel model = MemoryModel::uniform(MemoryMode::Static, 256, 1.0);
  for (auto _ : state) {
    for (std::size_t h = 1; h <= 256; ++h)
      benchmark::DoNotOptimize(memory_estimate(model, h));
  }
}
BENCHMARK(BM_memory_estimate);

}  // namespace

BENCHMARK_MAIN();
