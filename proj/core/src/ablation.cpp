#include "hubscope/ablation.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "hubscope/error.hpp"
#include "hubscope/parallel.hpp"

namespace hubscope {

std::vector<std::size_t> rank_hubs(const InDegreeProfile& profile) {
  std::vector<std::size_t> order(profile.counts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return profile.counts[a] > profile.counts[b];
  });
  return order;
}

namespace {

void check_k(std::size_t k, std::size_t n) {
  if (k >= n) {
    throw ValidationError("ablation k = " + std::to_string(k) + " must be below n = " +
                          std::to_string(n));
  }
}

// Argmax per row over the candidates not flagged in `skip_col`, for the rows
// not flagged in `skip_row`. Lower index wins ties. Returns n_tgt for rows
// with no candidate left or skipped rows.
std::vector<std::size_t> masked_argmax(const ScoreMatrix& s, const std::vector<char>& skip_row,
                                       const std::vector<char>& skip_col) {
  const std::size_t none = s.n_tgt();
  std::vector<std::size_t> best(s.n_src(), none);
  parallel_for(s.n_src(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      if (!skip_row.empty() && skip_row[i]) continue;
      const auto r = s.row(i);
      std::size_t arg = none;
      for (std::size_t j = 0; j < r.size(); ++j) {
        if (!skip_col.empty() && skip_col[j]) continue;
        if (arg == none || r[j] > r[arg]) arg = j;
      }
      best[i] = arg;
    }
  });
  return best;
}

}  // namespace

double reciprocity_without(const ScoreMatrix& fwd, const ScoreMatrix& bwd,
                           std::span<const std::size_t> removed, RemovalSemantics semantics) {
  if (!fwd.square() || !bwd.square() || fwd.n_src() != bwd.n_src()) {
    throw ValidationError("ablation needs square forward and backward scores of equal size");
  }
  const std::size_t n = fwd.n_src();
  std::vector<char> gone(n, 0);
  for (std::size_t j : removed) {
    if (j >= n) throw ValidationError("removed index out of range");
    gone[j] = 1;
  }
  const std::size_t n_removed = static_cast<std::size_t>(std::count(gone.begin(), gone.end(), 1));
  check_k(n_removed, n);

  std::vector<std::size_t> f, b;
  if (semantics == RemovalSemantics::CandidatePool) {
    // Only the target-side candidate pool shrinks; the source pool searched
    // by backward queries is untouched.
    f = masked_argmax(fwd, {}, gone);
    b = masked_argmax(bwd, gone, {});
  } else {
    f = masked_argmax(fwd, gone, gone);
    b = masked_argmax(bwd, gone, gone);
  }
  std::size_t mutual = 0;
  for (std::size_t i = 0; i < n; ++i) mutual += (!gone[i] && f[i] == i && b[i] == i);
  const std::size_t denom = semantics == RemovalSemantics::CandidatePool ? n : n - n_removed;
  return static_cast<double>(mutual) / static_cast<double>(denom);
}

std::vector<std::size_t> hubs_to_remove(const ScoreMatrix& fwd, std::size_t k,
                                        HubRanking ranking) {
  check_k(k, fwd.n_tgt());
  if (k == 0) return {};
  if (ranking == HubRanking::Static) {
    auto order = rank_hubs(in_degree(fwd));
    order.resize(k);
    return order;
  }
  std::vector<std::size_t> levels;
  for (std::size_t lk : kAblationKs) {
    if (lk > 0 && lk < k) levels.push_back(lk);
  }
  levels.push_back(k);
  std::vector<std::size_t> removed;
  std::vector<char> gone(fwd.n_tgt(), 0);
  for (std::size_t level : levels) {
    const auto best = masked_argmax(fwd, {}, gone);
    InDegreeProfile p;
    p.counts.assign(fwd.n_tgt(), 0);
    for (std::size_t j : best) ++p.counts[j];
    p.total = fwd.n_src();
    for (std::size_t j : rank_hubs(p)) {
      if (removed.size() >= level) break;
      if (!gone[j]) {
        gone[j] = 1;
        removed.push_back(j);
      }
    }
  }
  return removed;
}

double ablate_topk(const ScoreMatrix& fwd, const ScoreMatrix& bwd, std::size_t k,
                   const AblationOptions& opt) {
  const auto removed = hubs_to_remove(fwd, k, opt.ranking);
  return reciprocity_without(fwd, bwd, removed, opt.semantics);
}

double ablate_topk(const ParallelDataset& ds, std::size_t k, const AblationOptions& opt) {
  check_k(k, ds.n());
  const ScoreMatrix fwd = cosine_matrix(ds.src(), ds.tgt());
  return ablate_topk(fwd, fwd.transposed(), k, opt);
}

double random_ablation_control(const ScoreMatrix& fwd, const ScoreMatrix& bwd, std::size_t k,
                               std::size_t trials, std::uint64_t seed,
                               RemovalSemantics semantics) {
  if (trials < 1) throw ValidationError("random ablation needs at least one trial");
  const std::size_t n = fwd.n_tgt();
  check_k(k, n);
  double sum = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(t)};
    std::mt19937_64 rng(seq);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // Partial Fisher-Yates: the first k slots become a uniform k-subset.
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(k);
    sum += reciprocity_without(fwd, bwd, idx, semantics);
  }
  return sum / static_cast<double>(trials);
}

double random_ablation_control(const ParallelDataset& ds, std::size_t k, std::size_t trials,
                               std::uint64_t seed, RemovalSemantics semantics) {
  check_k(k, ds.n());
  const ScoreMatrix fwd = cosine_matrix(ds.src(), ds.tgt());
  return random_ablation_control(fwd, fwd.transposed(), k, trials, seed, semantics);
}

AblationCurve ablation_curve(const ScoreMatrix& fwd, const ScoreMatrix& bwd,
                             const std::vector<std::size_t>& ks, const AblationOptions& opt) {
  AblationCurve c;
  c.ks = ks;
  for (std::size_t k : ks) c.R_values.push_back(ablate_topk(fwd, bwd, k, opt));
  c.monotone = std::is_sorted(c.R_values.rbegin(), c.R_values.rend());
  return c;
}

}  // namespace hubscope
