#pragma once

#include "lmdb/features.hpp"
#include "lmdb/kernels.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace lmdb {

struct GreedyResult {
  Slate slate;                      // in selection order
  std::vector<double> gain_trace;   // ηᵀΔ(a_k | a_1..a_{k-1})
};

/// Modular dispersion greedy search: K times, append the remaining candidate
/// with the largest ηᵀΔ(a|A), smallest id on ties. Always fills K slots, even
/// when the best remaining gain is negative.
GreedyResult greedy_select(const PreferenceVector& eta, const ItemCatalog& catalog,
                           std::span<const ItemId> candidates, int K);

struct ExhaustiveResult {
  std::vector<ItemId> items;  // ascending
  double value = 0.0;
};

inline constexpr std::uint64_t kDefaultSubsetBudget = 10'000'000;

/// argmax over K-subsets of F(·|η). Subsets suffice because F is
/// order-independent. Throws TooLargeInstance when C(|candidates|, K)
/// exceeds `budget`.
ExhaustiveResult exhaustive_optimum(const PreferenceVector& eta, const ItemCatalog& catalog,
                                    std::span<const ItemId> candidates, int K,
                                    std::uint64_t budget = kDefaultSubsetBudget,
                                    Execution exec = Execution::parallel);

/// F(A_greedy|η) / F(A*|η). Throws DegenerateInstance when F(A*|η) == 0.
double approximation_ratio(const PreferenceVector& eta, const ItemCatalog& catalog,
                           std::span<const ItemId> candidates, int K,
                           std::uint64_t budget = kDefaultSubsetBudget,
                           Execution exec = Execution::parallel);

/// Candidate list {0, ..., L-1}.
std::vector<ItemId> all_items(const ItemCatalog& catalog);

}  // namespace lmdb
