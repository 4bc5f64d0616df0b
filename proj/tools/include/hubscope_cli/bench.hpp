#pragma once

#include <cstddef>
#include <cstdint>

#include "hubscope/report.hpp"

namespace hubscope::cli {

struct BenchConfig {
  std::size_t n = 6500;
  std::size_t dim = 1024;
  std::size_t k = 10;
  std::size_t reps = 3;
  std::size_t queries = 256;  // batch used for the per-query timings
  std::uint64_t seed = 0;
  std::size_t budget_mb = 4096;
};

// Bytes the pipeline holds at once: the n x n cosine matrix, the two r_k
// vectors and the CSLS output, 8 bytes each, plus both embedding clouds.
// 8 * (2 n^2 + 2 n) + 2 * 8 * n * dim.
std::size_t required_bytes(std::size_t n, std::size_t dim);

struct BenchResult {
  std::size_t reps = 0;
  // Stage medians over reps, milliseconds.
  double cosine_ms = 0.0;
  double rk_ms = 0.0;       // index-time r_k pass from the embeddings
  double csls_ms = 0.0;     // adjustment of a materialized cosine matrix
  double rk_from_matrix_ms = 0.0;  // r_k read off an existing matrix, for reference
  // Per-query medians, microseconds.
  double query_cos_us = 0.0;
  double query_csls_cached_us = 0.0;
  double query_csls_uncached_us = 0.0;
  double cached_overhead_pct = 0.0;

  double pipeline_ms() const { return cosine_ms + rk_ms + csls_ms; }
};

// Throws ValidationError when required_bytes exceeds the budget.
BenchResult run_bench(const BenchConfig& cfg);

ExperimentReport bench_report(const BenchResult& r, const BenchConfig& cfg);

}  // namespace hubscope::cli
