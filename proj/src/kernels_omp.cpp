#include "lmdb/kernels.hpp"

#include "subset_scan.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

namespace lmdb {

int parallel_workers() { return omp_get_max_threads(); }

void set_parallel_workers(int workers) {
  if (workers >= 1) omp_set_num_threads(workers);
}

void ucb_scores_omp(const UcbModel& model, const Matrix& relevance, const Matrix& diversity,
                    std::span<double> score, std::span<double> width_sq) {
  const auto n = static_cast<long>(relevance.cols());
#pragma omp parallel for schedule(static)
  for (long j = 0; j < n; ++j) {
    const double v = model.width_sq(relevance.col(j), diversity.col(j));
    width_sq[j] = v;
    score[j] = model.theta_hat.dot(relevance.col(j)) + model.beta_hat.dot(diversity.col(j)) +
               model.alpha * std::sqrt(std::max(v, 0.0));
  }
}

SubsetOptimum best_subset_omp(const PreferenceVector& eta, const ItemCatalog& catalog,
                              std::span<const ItemId> candidates, int K) {
  detail::validate_scan(catalog, eta, candidates, K);
  const detail::SubsetObjective objective(eta, catalog, candidates);
  const int n = static_cast<int>(candidates.size());
  const std::uint64_t total = binomial(static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(K));

  // Contiguous rank ranges per chunk; each chunk unranks its first subset and
  // then walks successors, so the per-chunk bests reduce to the serial answer.
  const std::uint64_t chunks = std::min<std::uint64_t>(total, 64ULL * static_cast<std::uint64_t>(omp_get_max_threads()));
  std::vector<detail::ScanBest> partial(chunks);

#pragma omp parallel for schedule(dynamic)
  for (long c = 0; c < static_cast<long>(chunks); ++c) {
    const std::uint64_t begin = total * static_cast<std::uint64_t>(c) / chunks;
    const std::uint64_t end = total * static_cast<std::uint64_t>(c + 1) / chunks;
    std::vector<int> pos = detail::unrank_combination(begin, n, K);
    for (std::uint64_t rank = begin; rank < end; ++rank) {
      partial[c].offer(objective(pos), rank, pos);
      detail::next_combination(pos, n);
    }
  }

  detail::ScanBest best;
  for (const auto& p : partial) {
    if (!p.pos.empty()) best.offer(p.value, p.rank, p.pos);
  }
  return detail::finish_scan(best, eta, catalog, candidates, total);
}

}  // namespace lmdb
