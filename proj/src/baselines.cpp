#include "lmdb/baselines.hpp"

#include "lmdb/errors.hpp"
#include "lmdb/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace lmdb {

namespace {

void require_enough(std::span<const ItemId> candidates, int K) {
  if (K < 1) throw PreconditionViolation("K must be positive");
  if (static_cast<std::size_t>(K) > candidates.size()) {
    throw InsufficientCandidates("need " + std::to_string(K) + " candidates, have " +
                                 std::to_string(candidates.size()));
  }
  std::set<ItemId> seen;
  for (ItemId a : candidates) {
    if (!seen.insert(a).second) throw DuplicateItem("candidate " + std::to_string(a) + " listed twice");
  }
}

// Index of the best unchosen candidate by r_a, smallest id on ties.
std::size_t best_unchosen(const StaticScorer& scorer, std::span<const ItemId> candidates,
                          const std::vector<bool>& chosen) {
  std::size_t best = candidates.size();
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    if (chosen[j]) continue;
    if (best == candidates.size()) {
      best = j;
      continue;
    }
    const double r = scorer.quality(candidates[j]);
    const double rb = scorer.quality(candidates[best]);
    if (r > rb || (r == rb && candidates[j] < candidates[best])) best = j;
  }
  return best;
}

}  // namespace

StaticScorer::StaticScorer(const ItemCatalog& catalog, Vector mean_user) : mean_user_(std::move(mean_user)) {
  if (mean_user_.size() != catalog.relevance_dim()) throw DimensionMismatch("mean user vector must have length d");
  quality_.resize(static_cast<std::size_t>(catalog.item_count()));
  for (ItemId a = 0; a < catalog.item_count(); ++a) {
    quality_[a] = 1.0 / (1.0 + std::exp(-mean_user_.dot(catalog.relevance(a))));
  }
}

Slate logrank_select(const StaticScorer& scorer, std::span<const ItemId> candidates, int K) {
  require_enough(candidates, K);
  std::vector<ItemId> order(candidates.begin(), candidates.end());
  std::partial_sort(order.begin(), order.begin() + K, order.end(), [&scorer](ItemId a, ItemId b) {
    const double ra = scorer.quality(a);
    const double rb = scorer.quality(b);
    return ra > rb || (ra == rb && a < b);
  });
  order.resize(static_cast<std::size_t>(K));
  return Slate(std::move(order), K);
}

Slate mmr_select(const StaticScorer& scorer, const ItemCatalog& catalog, std::span<const ItemId> candidates, int K,
                 double alpha_mmr) {
  require_enough(candidates, K);
  if (!(alpha_mmr >= 0.0 && alpha_mmr <= 1.0)) throw PreconditionViolation("MMR alpha must lie in [0, 1]");
  const std::size_t n = candidates.size();
  std::vector<double> similarity_sum(n, 0.0);
  std::vector<bool> chosen(n, false);
  Slate slate(K);
  for (int step = 0; step < K; ++step) {
    std::size_t best = n;
    double best_score = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (chosen[j]) continue;
      double score = alpha_mmr * scorer.quality(candidates[j]);
      if (step > 0) score -= (1.0 - alpha_mmr) / step * similarity_sum[j];
      if (best == n || score > best_score || (score == best_score && candidates[j] < candidates[best])) {
        best = j;
        best_score = score;
      }
    }
    chosen[best] = true;
    const ItemId pick = candidates[best];
    slate.push_back(pick);
    for (std::size_t j = 0; j < n; ++j) {
      if (!chosen[j]) {
        similarity_sum[j] += cosine_similarity(catalog.relevance(candidates[j]), catalog.relevance(pick));
      }
    }
  }
  return slate;
}

Slate epsilon_greedy_select(const StaticScorer& scorer, std::span<const ItemId> candidates, int K, double epsilon,
                            std::uint64_t seed) {
  require_enough(candidates, K);
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw PreconditionViolation("epsilon must lie in [0, 1]");
  Rng rng(seed);
  const std::size_t n = candidates.size();
  std::vector<bool> chosen(n, false);
  Slate slate(K);
  for (int step = 0; step < K; ++step) {
    std::size_t pick;
    if (rng.bernoulli(epsilon)) {
      // Uniform over the n - step unchosen candidates, in candidate order.
      std::uint64_t target = rng.below(n - static_cast<std::size_t>(step));
      pick = 0;
      for (;; ++pick) {
        if (chosen[pick]) continue;
        if (target == 0) break;
        --target;
      }
    } else {
      pick = best_unchosen(scorer, candidates, chosen);
    }
    chosen[pick] = true;
    slate.push_back(candidates[pick]);
  }
  return slate;
}

LogRankPolicy::LogRankPolicy(std::shared_ptr<const StaticScorer> scorer, int K) : scorer_(std::move(scorer)), K_(K) {}

Recommendation LogRankPolicy::select(std::span<const ItemId> candidates, int /*round*/) {
  return Recommendation{logrank_select(*scorer_, candidates, K_), {}, {}};
}

MmrPolicy::MmrPolicy(std::shared_ptr<const StaticScorer> scorer, std::shared_ptr<const ItemCatalog> catalog, int K,
                     double alpha_mmr)
    : scorer_(std::move(scorer)), catalog_(std::move(catalog)), K_(K), alpha_mmr_(alpha_mmr) {}

Recommendation MmrPolicy::select(std::span<const ItemId> candidates, int /*round*/) {
  return Recommendation{mmr_select(*scorer_, *catalog_, candidates, K_, alpha_mmr_), {}, {}};
}

EpsilonGreedyPolicy::EpsilonGreedyPolicy(std::shared_ptr<const StaticScorer> scorer, int K, double epsilon,
                                         std::uint64_t seed)
    : scorer_(std::move(scorer)), K_(K), epsilon_(epsilon), seed_(seed) {}

Recommendation EpsilonGreedyPolicy::select(std::span<const ItemId> candidates, int round) {
  return Recommendation{
      epsilon_greedy_select(*scorer_, candidates, K_, epsilon_, derive_seed(seed_, static_cast<std::uint64_t>(round))),
      {},
      {}};
}

}  // namespace lmdb
