#include <benchmark/benchmark.h>

#include "gfl/constructions.hpp"
#include "gfl/densela.hpp"
#include "gfl/transformer.hpp"

namespace {

constexpr int kLayers = 20;
constexpr int kDemands = 4;

gfl::Graph bench_graph(int n) { return gfl::generate_csl_random_skip(n, 1); }

gfl::TaskSpec gd_task(const gfl::Matrix& lap) {
  gfl::TaskSpec t;
  t.kind = gfl::TaskKind::electric_gd;
  t.layers = kLayers;
  t.k = kDemands;
  t.step = 1.0 / gfl::spectral_norm(lap);
  return t;
}

void BM_FullForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto g = bench_graph(n);
  const gfl::Matrix b = gfl::build_incidence(g);
  const auto task = gd_task(gfl::laplacian(b));
  const auto demands = gfl::sample_demands(n, kDemands, true, 3);
  const auto z0 = gfl::standard_input(b, demands.psi);
  const auto weights = gfl::electric_gd_weights(g.num_edges(), kDemands, task.step, kLayers);
  for (auto _ : state) benchmark::DoNotOptimize(gfl::forward(z0, weights));
  state.SetComplexityN(n);
}

void BM_EfficientForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto g = bench_graph(n);
  const gfl::Matrix b = gfl::build_incidence(g);
  const auto cfg = gfl::efficient_config(gd_task(gfl::laplacian(b)));
  gfl::Matrix phi_t = gfl::Matrix::Zero(2 * kDemands, n);
  phi_t.topRows(kDemands) = gfl::sample_demands(n, kDemands, true, 3).psi.transpose();
  const gfl::Matrix b_t = b.transpose();
  for (auto _ : state) benchmark::DoNotOptimize(gfl::efficient_forward(b_t, phi_t, cfg));
  state.SetComplexityN(n);
}

void BM_SymEig(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const gfl::Matrix lap = gfl::laplacian(gfl::build_incidence(bench_graph(n)));
  for (auto _ : state) benchmark::DoNotOptimize(gfl::sym_eig(lap));
  state.SetComplexityN(n);
}

}  // namespace

BENCHMARK(BM_FullForward)->RangeMultiplier(2)->Range(16, 128)->Complexity();
BENCHMARK(BM_EfficientForward)->RangeMultiplier(2)->Range(16, 128)->Complexity();
BENCHMARK(BM_SymEig)->RangeMultiplier(2)->Range(16, 256)->Complexity();
BENCHMARK_MAIN();
