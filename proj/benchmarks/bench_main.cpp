// Microbenchmarks for the hot paths: sampling, dense algebra, one
// refinement layer, and the full pipeline with and without the tape.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "groundsel/dataset.hpp"
#include "groundsel/geometry.hpp"
#include "groundsel/model.hpp"
#include "groundsel/ops.hpp"
#include "groundsel/scenegen.hpp"
#include "groundsel/tensor.hpp"

namespace {

using namespace groundsel;

std::vector<std::array<double, 3>> random_coords(int64_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::array<double, 3>> coords(static_cast<size_t>(n));
  for (auto& c : coords) c = {u(rng), u(rng), u(rng)};
  return coords;
}

void bench_fps(benchmark::State& state) {
  const auto coords = random_coords(2048, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(farthest_point_sample(coords, 512));
  }
}
BENCHMARK(bench_fps)->Unit(benchmark::kMillisecond);

void bench_knn(benchmark::State& state) {
  const auto base = random_coords(2048, 6);
  const auto query = random_coords(1024, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(knn_group(query, base, 8));
  }
}
BENCHMARK(bench_knn)->Unit(benchmark::kMillisecond);

void bench_matmul(benchmark::State& state) {
  const int64_t n = state.range(0);
  std::mt19937_64 rng(8);
  Tensor a = Tensor::uniform({n, n}, rng, -1.0, 1.0);
  Tensor b = Tensor::uniform({n, n}, rng, -1.0, 1.0);
  Graph g(false);
  for (auto _ : state) {
    benchmark::DoNotOptimize(matmul(g, a, b));
  }
}
BENCHMARK(bench_matmul)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

const PreparedScene& bench_scene() {
  static const PreparedScene ps = [] {
    return prepare_scene(generate_scene(1), prepare_config(ModelConfig{}, LossConfig{}));
  }();
  return ps;
}

const GroundingModel& bench_model() {
  static const GroundingModel model{ModelConfig{}};
  return model;
}

void bench_forward(benchmark::State& state) {
  const GroundingModel& model = bench_model();
  const PreparedScene& ps = bench_scene();
  for (auto _ : state) {
    Graph g(false);
    benchmark::DoNotOptimize(model.forward(g, ps));
  }
}
BENCHMARK(bench_forward)->Unit(benchmark::kMillisecond);

void bench_train_step(benchmark::State& state) {
  GroundingModel model{ModelConfig{}};
  const PreparedScene& ps = bench_scene();
  const LossConfig lc;
  for (auto _ : state) {
    for (const auto& [name, t] : model.params().items()) {
      Tensor copy = t;
      copy.zero_grad();
    }
    Graph g(true);
    const ForwardResult fr = model.forward(g, ps);
    const LossBreakdown lb = compute_losses(g, fr, ps, lc);
    g.backward(lb.total);
    benchmark::DoNotOptimize(lb.total.value());
  }
}
BENCHMARK(bench_train_step)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
