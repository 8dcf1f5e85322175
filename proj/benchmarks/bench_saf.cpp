#include <benchmark/benchmark.h>

#include <random>

#include "saf/dataio.hpp"
#include "saf/filters.hpp"
#include "saf/model.hpp"
#include "saf/newgraph.hpp"
#include "saf/spectra.hpp"
#include "saf/train.hpp"

namespace {

using namespace saf;

Graph bench_graph(std::int64_t n) {
  SbmSpec s;
  s.num_nodes = n;
  s.num_classes = 4;
  s.p_in = 20.0 / static_cast<double>(n);
  s.p_out = 4.0 / static_cast<double>(n);
  s.feature_dim = 32;
  s.seed = 1;
  return generate_sbm(s);
}

void BM_DenseEigh(benchmark::State& state) {
  const auto l = normalized_laplacian(bench_graph(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(dense_eigh(l));
}
BENCHMARK(BM_DenseEigh)->Arg(200)->Arg(400)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_LanczosBothEnds(benchmark::State& state) {
  const auto l = normalized_laplacian(bench_graph(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lanczos_extremal(l, state.range(1), SpectrumEnd::BothEnds, 3));
}
BENCHMARK(BM_LanczosBothEnds)
    ->Args({400, 20})
    ->Args({800, 20})
    ->Args({3200, 20})
    ->Args({3200, 100})
    ->Unit(benchmark::kMillisecond);

void BM_ApplyFilterPoly(benchmark::State& state) {
  const auto g = bench_graph(state.range(0));
  const auto l = normalized_laplacian(g);
  const PolyFilter f = identity_filter(FilterBasis::Bernstein, 10);
  for (auto _ : state) benchmark::DoNotOptimize(apply_filter_poly(f, l, g.features()));
}
BENCHMARK(BM_ApplyFilterPoly)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_BuildAdaptedGraph(benchmark::State& state) {
  const auto l = normalized_laplacian(bench_graph(state.range(0)));
  const auto basis = dense_eigh(l);
  const BernsteinFilter f{{1.0, 0.8, 0.6, 0.7, 0.9, 1.0, 0.8, 0.6, 0.7, 0.9, 1.0}};
  const Eigen::VectorXd g = response_on_basis(f, basis);
  for (auto _ : state) benchmark::DoNotOptimize(build_adapted_graph(basis, g, 0.5));
}
BENCHMARK(BM_BuildAdaptedGraph)->Arg(200)->Arg(400)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_Forward(benchmark::State& state) {
  const auto g = bench_graph(state.range(0));
  GraphArtifacts art;
  art.laplacian = normalized_laplacian(g);
  art.basis = dense_eigh(art.laplacian);
  std::mt19937_64 rng(1);
  const SafParams params = init_params(g.num_features(), 64, g.num_classes(), FilterBasis::Bernstein, 10, rng);
  ModelConfig config;
  config.epsilon = state.range(1) ? 1e-3 : 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(forward(g.features(), art, params, config, false));
}
BENCHMARK(BM_Forward)->Args({400, 0})->Args({400, 1})->Args({800, 0})->Unit(benchmark::kMillisecond);

void BM_FitEpoch(benchmark::State& state) {
  const auto g = bench_graph(state.range(0));
  TrainConfig config;
  config.max_epochs = 10;
  config.patience = 10;
  const auto prepared = prepare_artifacts(g, config);
  const Split split = make_split(g, SplitScheme::Dense, 0);
  for (auto _ : state) benchmark::DoNotOptimize(fit(g, prepared.artifacts, split, config));
  state.SetItemsProcessed(state.iterations() * config.max_epochs);
}
BENCHMARK(BM_FitEpoch)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
