#include <benchmark/benchmark.h>

#include <random>

#include "hubscope/stats.hpp"

using namespace hubscope;

namespace {

std::vector<std::vector<double>> columns(std::size_t p, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> d;
  std::vector<std::vector<double>> out(p, std::vector<double>(n));
  for (auto& c : out) {
    for (auto& v : c) v = d(g);
  }
  return out;
}

void BM_Dominance(benchmark::State& st) {
  const std::size_t p = st.range(0);
  auto cols = columns(p + 1, 200, 1);
  const auto y = cols.back();
  cols.pop_back();
  std::vector<std::string> names;
  for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
  const auto d = stats::make_design(cols, names);
  for (auto _ : st) benchmark::DoNotOptimize(stats::dominance_analysis(y, d));
}
BENCHMARK(BM_Dominance)->Arg(4)->Arg(5)->Arg(8)->Unit(benchmark::kMicrosecond);

void BM_MannWhitneyExact(benchmark::State& st) {
  const auto c = columns(2, 8, 2);
  for (auto _ : st) benchmark::DoNotOptimize(stats::mann_whitney_u(c[0], c[1], stats::MwuMethod::Exact));
}
BENCHMARK(BM_MannWhitneyExact)->Unit(benchmark::kMicrosecond);

void BM_PermutationCorrelation(benchmark::State& st) {
  const auto c = columns(2, 8, 3);
  stats::CorrelationOptions opt;
  opt.permutation = true;
  for (auto _ : st) benchmark::DoNotOptimize(stats::correlation(c[0], c[1], stats::CorrMode::Spearman, {}, opt));
}
BENCHMARK(BM_PermutationCorrelation)->Unit(benchmark::kMillisecond);

}  // namespace
