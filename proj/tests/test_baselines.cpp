#include "lmdb/baselines.hpp"
#include "lmdb/errors.hpp"
#include "lmdb/greedy.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace lmdb;

namespace {

double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

double quality(const ItemCatalog& c, const Vector& u, ItemId a) {
  return sigmoid(oracle::dot(std::vector<double>(u.data(), u.data() + u.size()), oracle::column(c.relevance_matrix(), a)));
}

std::vector<ItemId> sort_oracle(const ItemCatalog& c, const Vector& u, std::vector<ItemId> ids, int K) {
  std::stable_sort(ids.begin(), ids.end(), [&](ItemId a, ItemId b) {
    const double ra = quality(c, u, a);
    const double rb = quality(c, u, b);
    return ra > rb || (ra == rb && a < b);
  });
  ids.resize(static_cast<std::size_t>(K));
  return ids;
}

std::vector<ItemId> items(const Slate& s) { return {s.begin(), s.end()}; }

bool distinct(const Slate& s) { return std::set<ItemId>(s.begin(), s.end()).size() == s.size(); }

Vector random_user(Rng& rng, int d) {
  Vector u(d);
  for (int i = 0; i < d; ++i) u(i) = rng.uniform(-2.0, 2.0);
  return u;
}

}  // namespace

TEST_SUITE("static scorer") {
  TEST_CASE("quality is the sigmoid of the mean-user score") {
    Rng rng(1);
    auto c = oracle::random_catalog(rng, 10, 3, -1.0, 1.0);
    const Vector u = random_user(rng, 3);
    const StaticScorer s(*c, u);
    for (ItemId a = 0; a < 10; ++a) {
      CHECK(s.quality(a) == doctest::Approx(quality(*c, u, a)).epsilon(1e-14));
      CHECK(s.quality(a) > 0.0);
      CHECK(s.quality(a) < 1.0);
    }
    CHECK_THROWS_AS(StaticScorer(*c, Vector::Zero(2)), DimensionMismatch);
  }
}

TEST_SUITE("logrank") {
  TEST_CASE("K = 1 picks the highest quality") {
    Rng rng(2);
    for (int t = 0; t < 50; ++t) {
      auto c = oracle::random_catalog(rng, 12, 3, -1.0, 1.0);
      const Vector u = random_user(rng, 3);
      const StaticScorer s(*c, u);
      CHECK(logrank_select(s, all_items(*c), 1)[0] == sort_oracle(*c, u, all_items(*c), 1)[0]);
    }
  }

  TEST_CASE("equal qualities fall back to id order") {
    const ItemCatalog c(Matrix::Ones(2, 6), {PairwiseMetric::cosine()});
    const StaticScorer s(c, Vector::Ones(2));
    CHECK(items(logrank_select(s, all_items(c), 3)) == std::vector<ItemId>{0, 1, 2});
    CHECK(items(logrank_select(s, std::vector<ItemId>{5, 4, 2, 3}, 2)) == std::vector<ItemId>{2, 3});
  }

  TEST_CASE("five-item instance matches the sort oracle") {
    Matrix z(2, 5);
    z << 0.1, 0.9, -0.3, 0.5, 0.7,
         0.2, -0.4, 0.8, 0.1, 0.0;
    const ItemCatalog c(z, {PairwiseMetric::cosine()});
    Vector u(2);
    u << 1.0, 0.5;
    const StaticScorer s(c, u);
    // Scores: 0.2, 0.7, 0.1, 0.55, 0.7 → ids 1 and 4 tie.
    for (int K = 1; K <= 5; ++K) CHECK(items(logrank_select(s, all_items(c), K)) == sort_oracle(c, u, all_items(c), K));
    CHECK(items(logrank_select(s, all_items(c), 3)) == std::vector<ItemId>{1, 4, 3});
  }

  TEST_CASE("invariant under a monotone transform of quality") {
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
      auto c = oracle::random_catalog(rng, 15, 4, -1.0, 1.0);
      const Vector u = random_user(rng, 4);
      // σ(c·logit r) is strictly increasing in r for c > 0.
      const StaticScorer a(*c, u), b(*c, 3.7 * u);
      CHECK(logrank_select(a, all_items(*c), 5) == logrank_select(b, all_items(*c), 5));
    }
  }

  TEST_CASE("errors") {
    Rng rng(4);
    auto c = oracle::random_catalog(rng, 3, 2);
    const StaticScorer s(*c, Vector::Ones(2));
    CHECK_THROWS_AS(logrank_select(s, all_items(*c), 4), InsufficientCandidates);
  }
}

TEST_SUITE("mmr") {
  TEST_CASE("alpha = 1 equals logrank item for item") {
    Rng rng(5);
    for (int t = 0; t < 50; ++t) {
      auto c = oracle::random_catalog(rng, 15, 4, -1.0, 1.0);
      const StaticScorer s(*c, random_user(rng, 4));
      CHECK(mmr_select(s, *c, all_items(*c), 6, 1.0) == logrank_select(s, all_items(*c), 6));
    }
  }

  TEST_CASE("first pick is the best quality for any alpha") {
    Rng rng(6);
    for (double alpha : {0.01, 0.3, 0.9}) {
      auto c = oracle::random_catalog(rng, 10, 3, -1.0, 1.0);
      const StaticScorer s(*c, random_user(rng, 3));
      CHECK(mmr_select(s, *c, all_items(*c), 3, alpha)[0] == logrank_select(s, all_items(*c), 1)[0]);
    }
  }

  TEST_CASE("second pick skips a near duplicate of the first") {
    Matrix z(2, 4);
    z << 1.0, 0.98, 0.2, 0.1,
         0.05, 0.06, 1.0, 1.0;
    const ItemCatalog c(z, {PairwiseMetric::cosine()});
    Vector u(2);
    u << 2.0, 0.0;
    const StaticScorer s(c, u);
    const Slate slate = mmr_select(s, c, all_items(c), 2, 0.5);
    CHECK(slate[0] == 0);

    std::vector<double> score(4, -1e9);
    for (ItemId a = 1; a < 4; ++a) {
      const double sim = 1.0 - oracle::cosine_distance(oracle::column(z, a), oracle::column(z, 0));
      score[static_cast<std::size_t>(a)] = 0.5 * s.quality(a) - 0.5 * sim;
    }
    const auto best = static_cast<ItemId>(std::max_element(score.begin(), score.end()) - score.begin());
    CHECK(best == 3);
    CHECK(slate[1] == best);
    // Without the penalty the duplicate would come second.
    CHECK(logrank_select(s, all_items(c), 2)[1] == 1);
  }

  TEST_CASE("no duplicates and exact K") {
    Rng rng(7);
    for (int t = 0; t < 100; ++t) {
      auto c = oracle::random_catalog(rng, 12, 3, -1.0, 1.0);
      const StaticScorer s(*c, random_user(rng, 3));
      const Slate slate = mmr_select(s, *c, all_items(*c), 12, rng.uniform());
      CHECK(slate.size() == 12);
      CHECK(distinct(slate));
    }
  }

  TEST_CASE("errors") {
    Rng rng(8);
    auto c = oracle::random_catalog(rng, 4, 2);
    const StaticScorer s(*c, Vector::Ones(2));
    CHECK_THROWS_AS(mmr_select(s, *c, all_items(*c), 5, 0.9), InsufficientCandidates);
    CHECK_THROWS_AS(mmr_select(s, *c, all_items(*c), 2, 1.5), PreconditionViolation);
  }
}

TEST_SUITE("epsilon greedy") {
  TEST_CASE("epsilon = 0 equals logrank") {
    Rng rng(9);
    auto c = oracle::random_catalog(rng, 15, 3, -1.0, 1.0);
    const StaticScorer s(*c, random_user(rng, 3));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      CHECK(epsilon_greedy_select(s, all_items(*c), 5, 0.0, seed) == logrank_select(s, all_items(*c), 5));
    }
  }

  TEST_CASE("epsilon = 1 includes each item with frequency K/L") {
    Rng rng(10);
    const int L = 10, K = 3, trials = 10000;
    auto c = oracle::random_catalog(rng, L, 3);
    const StaticScorer s(*c, Vector::Ones(3));
    std::vector<int> counts(L, 0);
    for (int i = 0; i < trials; ++i) {
      const Slate slate = epsilon_greedy_select(s, all_items(*c), K, 1.0, derive_seed(77, i));
      CHECK(distinct(slate));
      for (ItemId a : slate) ++counts[static_cast<std::size_t>(a)];
    }
    const double p = static_cast<double>(K) / L;
    const double sigma = std::sqrt(trials * p * (1 - p));
    for (int n : counts) CHECK(std::abs(n - trials * p) < 3.0 * sigma);
  }

  TEST_CASE("same seed gives the same slate") {
    Rng rng(11);
    auto c = oracle::random_catalog(rng, 20, 3);
    const StaticScorer s(*c, Vector::Ones(3));
    CHECK(epsilon_greedy_select(s, all_items(*c), 5, 0.5, 3) == epsilon_greedy_select(s, all_items(*c), 5, 0.5, 3));
  }

  TEST_CASE("errors") {
    Rng rng(12);
    auto c = oracle::random_catalog(rng, 4, 2);
    const StaticScorer s(*c, Vector::Ones(2));
    CHECK_THROWS_AS(epsilon_greedy_select(s, all_items(*c), 5, 0.1, 0), InsufficientCandidates);
    CHECK_THROWS_AS(epsilon_greedy_select(s, all_items(*c), 2, -0.1, 0), PreconditionViolation);
  }
}

TEST_SUITE("policy contract") {
  TEST_CASE("every baseline returns K distinct candidates and ignores feedback") {
    Rng rng(13);
    auto c = oracle::random_catalog(rng, 25, 4, -1.0, 1.0);
    auto scorer = std::make_shared<const StaticScorer>(*c, random_user(rng, 4));
    LogRankPolicy logrank(scorer, 5);
    MmrPolicy mmr(scorer, c, 5);
    EpsilonGreedyPolicy egreedy(scorer, 5, 0.3, 42);
    CHECK(logrank.name() == "logrank");
    CHECK(mmr.name() == "mmr");
    CHECK(egreedy.name() == "egreedy");
    for (Policy* p : std::initializer_list<Policy*>{&logrank, &mmr, &egreedy}) {
      for (int t = 1; t <= 20; ++t) {
        std::vector<ItemId> candidates;
        for (ItemId a = 0; a < 25; ++a) {
          if (rng.bernoulli(0.6)) candidates.push_back(a);
        }
        if (candidates.size() < 5) continue;
        const Recommendation r = p->select(candidates, t);
        CHECK(r.slate.size() == 5);
        CHECK(distinct(r.slate));
        for (ItemId a : r.slate) CHECK(std::find(candidates.begin(), candidates.end(), a) != candidates.end());
        const Recommendation again = p->select(candidates, t);
        p->observe(r, std::vector<double>(5, 1.0));
        CHECK(p->select(candidates, t).slate == again.slate);
      }
    }
  }

  TEST_CASE("epsilon greedy draws a fresh stream per round") {
    Rng rng(14);
    auto c = oracle::random_catalog(rng, 30, 3);
    auto scorer = std::make_shared<const StaticScorer>(*c, Vector::Ones(3));
    EpsilonGreedyPolicy p(scorer, 4, 1.0, 5);
    const auto ids = all_items(*c);
    std::set<std::vector<ItemId>> seen;
    for (int t = 1; t <= 10; ++t) seen.insert(items(p.select(ids, t).slate));
    CHECK(seen.size() > 1);
    CHECK(p.select(ids, 3).slate == EpsilonGreedyPolicy(scorer, 4, 1.0, 5).select(ids, 3).slate);
  }
}
