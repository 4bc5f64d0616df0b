#include <benchmark/benchmark.h>

#include "hubscope/ablation.hpp"
#include "hubscope/geometry.hpp"
#include "hubscope/rescoring.hpp"
#include "hubscope/synth.hpp"

using namespace hubscope;

namespace {

ParallelDataset pair_of(std::size_t n, std::size_t dim) {
  SynthConfig c = calibrated_config(1);
  c.n = n;
  c.dim = dim;
  c.hub_count = std::max<std::size_t>(1, n / 100);
  return generate_parallel(c);
}

void BM_CosineMatrix(benchmark::State& st) {
  const auto ds = pair_of(st.range(0), st.range(1));
  for (auto _ : st) benchmark::DoNotOptimize(cosine_matrix(ds.src(), ds.tgt()));
  st.SetItemsProcessed(st.iterations() * st.range(0) * st.range(0));
}
BENCHMARK(BM_CosineMatrix)->Args({500, 256})->Args({2000, 256})->Args({2000, 1024})->Unit(benchmark::kMillisecond);

void BM_PrecomputeRk(benchmark::State& st) {
  const auto ds = pair_of(st.range(0), 256);
  const auto cos = cosine_matrix(ds.src(), ds.tgt());
  for (auto _ : st) benchmark::DoNotOptimize(precompute_rk(cos, st.range(1)));
}
BENCHMARK(BM_PrecomputeRk)->Args({2000, 10})->Args({2000, 50})->Unit(benchmark::kMillisecond);

void BM_PrecomputeRkStreaming(benchmark::State& st) {
  const auto ds = pair_of(st.range(0), 256);
  for (auto _ : st) benchmark::DoNotOptimize(precompute_rk_streaming(ds.src(), ds.tgt(), 10, st.range(1)));
}
BENCHMARK(BM_PrecomputeRkStreaming)->Args({2000, 64})->Args({2000, 512})->Unit(benchmark::kMillisecond);

void BM_Csls(benchmark::State& st) {
  const auto ds = pair_of(st.range(0), 256);
  const auto cos = cosine_matrix(ds.src(), ds.tgt());
  const auto cache = precompute_rk(cos, 10);
  for (auto _ : st) benchmark::DoNotOptimize(csls(cos, cache));
}
BENCHMARK(BM_Csls)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_TopK(benchmark::State& st) {
  const auto ds = pair_of(2000, 256);
  const auto cos = cosine_matrix(ds.src(), ds.tgt());
  const Axis axis = st.range(1) ? Axis::PerCol : Axis::PerRow;
  for (auto _ : st) benchmark::DoNotOptimize(top_k(cos, st.range(0), axis));
}
BENCHMARK(BM_TopK)->Args({10, 0})->Args({10, 1})->Args({100, 0})->Unit(benchmark::kMillisecond);

void BM_InvertedSoftmax(benchmark::State& st) {
  const auto ds = pair_of(2000, 256);
  const auto cos = cosine_matrix(ds.src(), ds.tgt());
  for (auto _ : st) benchmark::DoNotOptimize(inverted_softmax(cos, 1.0));
}
BENCHMARK(BM_InvertedSoftmax)->Unit(benchmark::kMillisecond);

void BM_MutualProximity(benchmark::State& st) {
  const auto ds = pair_of(2000, 256);
  const auto cos = cosine_matrix(ds.src(), ds.tgt());
  for (auto _ : st) benchmark::DoNotOptimize(mutual_proximity(cos));
}
BENCHMARK(BM_MutualProximity)->Unit(benchmark::kMillisecond);

void BM_Whiten(benchmark::State& st) {
  const auto ds = pair_of(2000, 256);
  for (auto _ : st) benchmark::DoNotOptimize(transform_space(ds.src(), ds.tgt(), Transform::whiten(128)));
}
BENCHMARK(BM_Whiten)->Unit(benchmark::kMillisecond);

void BM_ReciprocityAndHubMass(benchmark::State& st) {
  const auto ds = pair_of(2000, 256);
  const auto fwd = cosine_matrix(ds.src(), ds.tgt());
  const auto bwd = fwd.transposed();
  for (auto _ : st) {
    benchmark::DoNotOptimize(reciprocity(fwd, bwd));
    benchmark::DoNotOptimize(hub_mass(in_degree(fwd), 0.01));
  }
}
BENCHMARK(BM_ReciprocityAndHubMass)->Unit(benchmark::kMillisecond);

void BM_AblationCurve(benchmark::State& st) {
  const auto ds = pair_of(2000, 256);
  const auto fwd = cosine_matrix(ds.src(), ds.tgt());
  const auto bwd = fwd.transposed();
  for (auto _ : st) benchmark::DoNotOptimize(ablation_curve(fwd, bwd));
}
BENCHMARK(BM_AblationCurve)->Unit(benchmark::kMillisecond);

}  // namespace
