#pragma once

#include "lmdb/features.hpp"
#include "lmdb/policy.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace lmdb {

/// Static item quality r_a = 1 / (1 + exp(−ū·z_a)), cached for every item.
class StaticScorer {
 public:
  StaticScorer(const ItemCatalog& catalog, Vector mean_user);

  double quality(ItemId a) const { return quality_.at(static_cast<std::size_t>(a)); }
  const Vector& mean_user() const { return mean_user_; }

 private:
  Vector mean_user_;
  std::vector<double> quality_;
};

/// Top-K candidates by r_a, descending; smallest id on ties.
Slate logrank_select(const StaticScorer& scorer, std::span<const ItemId> candidates, int K);

/// Maximal marginal relevance: repeatedly append the argmax of
/// α·r_a − ((1−α)/|A|)·Σ_{j∈A} sim(z_a, z_j), with the penalty taken as 0
/// while A is empty.
Slate mmr_select(const StaticScorer& scorer, const ItemCatalog& catalog, std::span<const ItemId> candidates, int K,
                 double alpha_mmr = 0.9);

/// Each slot independently: with probability ε a uniformly random unchosen
/// candidate, otherwise the best unchosen one by r_a.
Slate epsilon_greedy_select(const StaticScorer& scorer, std::span<const ItemId> candidates, int K,
                            double epsilon, std::uint64_t seed);

class LogRankPolicy final : public Policy {
 public:
  LogRankPolicy(std::shared_ptr<const StaticScorer> scorer, int K);
  std::string name() const override { return "logrank"; }
  Recommendation select(std::span<const ItemId> candidates, int round) override;
  void observe(const Recommendation&, std::span<const double>) override {}

 private:
  std::shared_ptr<const StaticScorer> scorer_;
  int K_;
};

class MmrPolicy final : public Policy {
 public:
  MmrPolicy(std::shared_ptr<const StaticScorer> scorer, std::shared_ptr<const ItemCatalog> catalog, int K,
            double alpha_mmr = 0.9);
  std::string name() const override { return "mmr"; }
  Recommendation select(std::span<const ItemId> candidates, int round) override;
  void observe(const Recommendation&, std::span<const double>) override {}

 private:
  std::shared_ptr<const StaticScorer> scorer_;
  std::shared_ptr<const ItemCatalog> catalog_;
  int K_;
  double alpha_mmr_;
};

/// Round t draws from the stream derive_seed(seed, t).
class EpsilonGreedyPolicy final : public Policy {
 public:
  EpsilonGreedyPolicy(std::shared_ptr<const StaticScorer> scorer, int K, double epsilon, std::uint64_t seed);
  std::string name() const override { return "egreedy"; }
  Recommendation select(std::span<const ItemId> candidates, int round) override;
  void observe(const Recommendation&, std::span<const double>) override {}

 private:
  std::shared_ptr<const StaticScorer> scorer_;
  int K_;
  double epsilon_;
  std::uint64_t seed_;
};

}  // namespace lmdb
