#pragma once

// Shared pieces of the exhaustive subset kernels.

#include "lmdb/errors.hpp"
#include "lmdb/features.hpp"
#include "lmdb/kernels.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace lmdb::detail {

// F restricted to a candidate list: per-item relevance scores plus the
// β-weighted pair distance table, indexed by candidate position.
struct SubsetObjective {
  std::vector<double> item_score;
  Matrix pair_weight;

  SubsetObjective(const PreferenceVector& eta, const ItemCatalog& catalog, std::span<const ItemId> candidates) {
    const auto n = static_cast<Eigen::Index>(candidates.size());
    item_score.resize(candidates.size());
    pair_weight = Matrix::Zero(n, n);
    for (Eigen::Index p = 0; p < n; ++p) {
      item_score[p] = eta.theta.dot(catalog.relevance_matrix().col(candidates[p]));
      for (Eigen::Index q = 0; q < p; ++q) {
        double w = 0.0;
        for (int i = 0; i < catalog.diversity_dim(); ++i) {
          w += eta.beta[i] * catalog.distance(i, candidates[p], candidates[q]);
        }
        pair_weight(p, q) = pair_weight(q, p) = w;
      }
    }
  }

  double operator()(const std::vector<int>& pos) const {
    double value = 0.0;
    for (std::size_t a = 0; a < pos.size(); ++a) {
      value += item_score[pos[a]];
      for (std::size_t b = a + 1; b < pos.size(); ++b) value += pair_weight(pos[a], pos[b]);
    }
    return value;
  }
};

// Lexicographic successor of a K-combination of {0..n-1}; false when done.
inline bool next_combination(std::vector<int>& pos, int n) {
  const int k = static_cast<int>(pos.size());
  int i = k - 1;
  while (i >= 0 && pos[i] == n - k + i) --i;
  if (i < 0) return false;
  ++pos[i];
  for (int j = i + 1; j < k; ++j) pos[j] = pos[j - 1] + 1;
  return true;
}

// The combination with lexicographic rank `rank`.
inline std::vector<int> unrank_combination(std::uint64_t rank, int n, int k) {
  std::vector<int> pos;
  pos.reserve(k);
  int next = 0;
  for (int slot = 0; slot < k; ++slot) {
    for (int c = next;; ++c) {
      const std::uint64_t below = binomial(static_cast<std::uint64_t>(n - c - 1), static_cast<std::uint64_t>(k - slot - 1));
      if (rank < below) {
        pos.push_back(c);
        next = c + 1;
        break;
      }
      rank -= below;
    }
  }
  return pos;
}

struct ScanBest {
  double value = -std::numeric_limits<double>::infinity();
  std::uint64_t rank = UINT64_MAX;
  std::vector<int> pos;

  void offer(double v, std::uint64_t r, const std::vector<int>& p) {
    if (v > value || (v == value && r < rank)) {
      value = v;
      rank = r;
      pos = p;
    }
  }
};

inline void validate_scan(const ItemCatalog& catalog, const PreferenceVector& eta, std::span<const ItemId> candidates,
                          int K) {
  require_compatible(eta, catalog);
  if (K < 1) throw PreconditionViolation("K must be positive");
  if (static_cast<std::size_t>(K) > candidates.size()) {
    throw InsufficientCandidates("need " + std::to_string(K) + " candidates, have " +
                                 std::to_string(candidates.size()));
  }
  for (ItemId a : candidates) catalog.require_valid(a);
}

inline SubsetOptimum finish_scan(const ScanBest& best, const PreferenceVector& eta, const ItemCatalog& catalog,
                                 std::span<const ItemId> candidates, std::uint64_t scanned) {
  SubsetOptimum out;
  for (int p : best.pos) out.items.push_back(candidates[p]);
  out.value = utility_unchecked(out.items, eta, catalog);
  out.subsets_scanned = scanned;
  return out;
}

}  // namespace lmdb::detail
