#include "lmdb/errors.hpp"
#include "lmdb/greedy.hpp"
#include "lmdb/kernels.hpp"
#include "lmdb/lmdh.hpp"
#include "oracle.hpp"

#include <doctest.h>

using namespace lmdb;

namespace {

HybridStatistics trained_statistics(Rng& rng, int d, int m, int rounds) {
  HybridStatistics stats(d, m, 2.0);
  for (int t = 0; t < rounds; ++t) {
    std::vector<Vector> features;
    std::vector<double> rewards;
    for (int k = 0; k < 3; ++k) {
      Vector zeta(d + m);
      for (int i = 0; i < d + m; ++i) zeta(i) = rng.uniform(-1, 1);
      features.push_back(zeta);
      rewards.push_back(rng.bernoulli(0.4) ? 1.0 : 0.0);
    }
    stats.update(features, rewards);
  }
  return stats;
}

}  // namespace

TEST_CASE("binomial") {
  CHECK(binomial(20, 5) == 15504);
  CHECK(binomial(5, 0) == 1);
  CHECK(binomial(3, 5) == 0);
  CHECK(binomial(100, 50) == UINT64_MAX);
}

TEST_CASE("serial and OpenMP UCB scores are bit-identical") {
  Rng rng(1);
  const int d = 6, m = 2, n = 997;
  const HybridStatistics stats = trained_statistics(rng, d, m, 40);
  const UcbModel model = stats.ucb_model(0.7);
  Matrix z(d, n), x(m, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < d; ++i) z(i, j) = rng.uniform(-1, 1);
    for (int i = 0; i < m; ++i) x(i, j) = rng.uniform(0, 3);
  }
  std::vector<double> s1(n), w1(n), s2(n), w2(n);
  ucb_scores_serial(model, z, x, s1, w1);
  for (int workers : {1, 2, 4}) {
    set_parallel_workers(workers);
    ucb_scores_omp(model, z, x, s2, w2);
    CHECK(s1 == s2);
    CHECK(w1 == w2);
  }
  // And both agree with the per-item reference.
  for (int j = 0; j < n; j += 97) {
    CHECK(w1[j] == doctest::Approx(confidence_width(z.col(j), x.col(j), stats)).epsilon(1e-12));
  }
}

TEST_CASE("serial and OpenMP subset scans agree, including ties") {
  Rng rng(2);
  for (int t = 0; t < 40; ++t) {
    const int L = 8 + static_cast<int>(rng.below(9));
    const int K = 1 + static_cast<int>(rng.below(5));
    auto c = oracle::random_catalog(rng, L, 4, -1.0, 1.0);
    const auto eta = oracle::random_preferences(rng, 4, 1, -1.0, 1.0);
    const auto ids = all_items(*c);
    const SubsetOptimum a = best_subset_serial(eta, *c, ids, K);
    for (int workers : {1, 3}) {
      set_parallel_workers(workers);
      const SubsetOptimum b = best_subset_omp(eta, *c, ids, K);
      CHECK(a.items == b.items);
      CHECK(a.value == b.value);
      CHECK(a.subsets_scanned == b.subsets_scanned);
    }
    CHECK(a.subsets_scanned == binomial(static_cast<std::uint64_t>(L), static_cast<std::uint64_t>(K)));
  }

  // All-equal items: every subset ties, the first in candidate order wins.
  const ItemCatalog flat(Matrix::Ones(2, 9), {PairwiseMetric::cosine()});
  const PreferenceVector eta(Vector::Ones(2), Vector::Ones(1));
  const std::vector<ItemId> order{8, 2, 5, 0, 1, 3, 4, 6, 7};
  CHECK(best_subset_serial(eta, flat, order, 3).items == std::vector<ItemId>{8, 2, 5});
  CHECK(best_subset_omp(eta, flat, order, 3).items == std::vector<ItemId>{8, 2, 5});
  CHECK(exhaustive_optimum(eta, flat, order, 3).items == std::vector<ItemId>{2, 5, 8});
}

TEST_CASE("exhaustive search gives the same answer in both execution modes") {
  Rng rng(3);
  auto c = oracle::random_catalog(rng, 20, 10);
  const auto eta = oracle::random_preferences(rng, 10, 1);
  const auto ids = all_items(*c);
  const auto a = exhaustive_optimum(eta, *c, ids, 5, kDefaultSubsetBudget, Execution::serial);
  const auto b = exhaustive_optimum(eta, *c, ids, 5, kDefaultSubsetBudget, Execution::parallel);
  CHECK(a.items == b.items);
  CHECK(a.value == b.value);
}
