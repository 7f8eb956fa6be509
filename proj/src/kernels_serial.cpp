#include "lmdb/kernels.hpp"

#include "subset_scan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lmdb {

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // result * (n - k + i) / i stays exact because result*(n-k+i) is divisible by i.
    const std::uint64_t factor = n - k + i;
    if (result > UINT64_MAX / factor) return UINT64_MAX;
    result = result * factor / i;
  }
  return result;
}

void ucb_scores_serial(const UcbModel& model, const Matrix& relevance, const Matrix& diversity,
                       std::span<double> score, std::span<double> width_sq) {
  const auto n = relevance.cols();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double v = model.width_sq(relevance.col(j), diversity.col(j));
    width_sq[j] = v;
    score[j] = model.theta_hat.dot(relevance.col(j)) + model.beta_hat.dot(diversity.col(j)) +
               model.alpha * std::sqrt(std::max(v, 0.0));
  }
}

SubsetOptimum best_subset_serial(const PreferenceVector& eta, const ItemCatalog& catalog,
                                 std::span<const ItemId> candidates, int K) {
  detail::validate_scan(catalog, eta, candidates, K);
  const detail::SubsetObjective objective(eta, catalog, candidates);
  const int n = static_cast<int>(candidates.size());

  detail::ScanBest best;
  std::vector<int> pos(K);
  for (int i = 0; i < K; ++i) pos[i] = i;
  std::uint64_t rank = 0;
  do {
    best.offer(objective(pos), rank, pos);
    ++rank;
  } while (detail::next_combination(pos, n));
  return detail::finish_scan(best, eta, catalog, candidates, rank);
}

}  // namespace lmdb
