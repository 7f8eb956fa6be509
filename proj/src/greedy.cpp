#include "lmdb/greedy.hpp"

#include "lmdb/errors.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace lmdb {

namespace {

void require_distinct_valid(const ItemCatalog& catalog, std::span<const ItemId> candidates) {
  std::set<ItemId> seen;
  for (ItemId a : candidates) {
    catalog.require_valid(a);
    if (!seen.insert(a).second) throw DuplicateItem("candidate " + std::to_string(a) + " listed twice");
  }
}

}  // namespace

std::vector<ItemId> all_items(const ItemCatalog& catalog) {
  std::vector<ItemId> ids(static_cast<std::size_t>(catalog.item_count()));
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

GreedyResult greedy_select(const PreferenceVector& eta, const ItemCatalog& catalog,
                           std::span<const ItemId> candidates, int K) {
  require_compatible(eta, catalog);
  if (K < 1) throw PreconditionViolation("K must be positive");
  if (static_cast<std::size_t>(K) > candidates.size()) {
    throw InsufficientCandidates("need " + std::to_string(K) + " candidates, have " +
                                 std::to_string(candidates.size()));
  }
  require_distinct_valid(catalog, candidates);

  const auto n = candidates.size();
  const int m = catalog.diversity_dim();
  std::vector<double> relevance_score(n);
  for (std::size_t j = 0; j < n; ++j) relevance_score[j] = eta.theta.dot(catalog.relevance_matrix().col(candidates[j]));
  // Δ_V(a|A) per candidate, grown by one slate item per step.
  Matrix diversity = Matrix::Zero(m, static_cast<Eigen::Index>(n));
  std::vector<bool> taken(n, false);

  GreedyResult result{Slate(K), {}};
  for (int step = 0; step < K; ++step) {
    std::size_t best = n;
    double best_gain = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (taken[j]) continue;
      const double gain = relevance_score[j] + eta.beta.dot(diversity.col(static_cast<Eigen::Index>(j)));
      if (best == n || gain > best_gain || (gain == best_gain && candidates[j] < candidates[best])) {
        best = j;
        best_gain = gain;
      }
    }
    taken[best] = true;
    const ItemId chosen = candidates[best];
    result.slate.push_back(chosen);
    result.gain_trace.push_back(best_gain);
    for (std::size_t j = 0; j < n; ++j) {
      if (taken[j]) continue;
      for (int i = 0; i < m; ++i) diversity(i, static_cast<Eigen::Index>(j)) += catalog.distance(i, candidates[j], chosen);
    }
  }
  return result;
}

ExhaustiveResult exhaustive_optimum(const PreferenceVector& eta, const ItemCatalog& catalog,
                                    std::span<const ItemId> candidates, int K, std::uint64_t budget,
                                    Execution exec) {
  if (K < 1) throw PreconditionViolation("K must be positive");
  require_distinct_valid(catalog, candidates);
  const std::uint64_t count = binomial(candidates.size(), static_cast<std::uint64_t>(K));
  if (count > budget) {
    throw TooLargeInstance("C(" + std::to_string(candidates.size()) + ", " + std::to_string(K) + ") = " +
                           std::to_string(count) + " subsets exceeds budget " + std::to_string(budget));
  }
  const SubsetOptimum best = exec == Execution::parallel ? best_subset_omp(eta, catalog, candidates, K)
                                                         : best_subset_serial(eta, catalog, candidates, K);
  ExhaustiveResult out{best.items, best.value};
  std::sort(out.items.begin(), out.items.end());
  return out;
}

double approximation_ratio(const PreferenceVector& eta, const ItemCatalog& catalog,
                           std::span<const ItemId> candidates, int K, std::uint64_t budget, Execution exec) {
  const ExhaustiveResult optimum = exhaustive_optimum(eta, catalog, candidates, K, budget, exec);
  if (optimum.value == 0.0) throw DegenerateInstance("optimal utility is zero; ratio undefined");
  const GreedyResult greedy = greedy_select(eta, catalog, candidates, K);
  return utility(greedy.slate, eta, catalog) / optimum.value;
}

}  // namespace lmdb
