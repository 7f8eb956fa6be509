#include "lmdb/environments.hpp"

#include "lmdb/greedy.hpp"

#include <algorithm>
#include <exception>
#include <iomanip>
#include <limits>
#include <ostream>

namespace lmdb {

std::vector<double> click_means(const Slate& slate, const SimInstance& instance) {
  const ItemCatalog& catalog = *instance.catalog;
  require_compatible(instance.eta_star, catalog);
  const Vector eta = instance.eta_star.joined();
  std::vector<double> means;
  means.reserve(slate.size());
  for (std::size_t k = 0; k < slate.size(); ++k) {
    const Vector delta = joint_marginal(slate[k], slate.items().first(k), catalog);
    means.push_back(eta.dot(delta));
  }
  return means;
}

std::vector<double> bernoulli_feedback(const Slate& slate, const SimInstance& instance, Rng& rng,
                                       std::size_t* clamp_hits) {
  std::vector<double> rewards;
  rewards.reserve(slate.size());
  for (double mean : click_means(slate, instance)) {
    if (mean < 0.0 || mean > 1.0) {
      if (clamp_hits) ++*clamp_hits;
      mean = std::clamp(mean, 0.0, 1.0);
    }
    rewards.push_back(rng.bernoulli(mean) ? 1.0 : 0.0);
  }
  return rewards;
}

std::vector<double> bernoulli_feedback(const Slate& slate, const SimInstance& instance, std::uint64_t seed,
                                       std::size_t* clamp_hits) {
  Rng rng(seed);
  return bernoulli_feedback(slate, instance, rng, clamp_hits);
}

std::vector<double> replay_feedback(const Slate& slate, ReplayUser& user) {
  for (ItemId a : slate) {
    if (user.consumed.count(a)) {
      throw ProtocolViolation("item " + std::to_string(a) + " was already recommended to user " +
                              std::to_string(user.user_id));
    }
  }
  std::vector<double> rewards;
  rewards.reserve(slate.size());
  for (ItemId a : slate) {
    rewards.push_back(user.positives.count(a) ? 1.0 : 0.0);
    user.consumed.insert(a);
  }
  return rewards;
}

std::vector<ItemId> candidate_set(int round, std::span<const ItemId> ground, const std::set<ItemId>& consumed,
                                  const CandidateSpec& spec, int K, std::uint64_t seed) {
  std::vector<ItemId> remaining;
  remaining.reserve(ground.size());
  for (ItemId a : ground) {
    if (!consumed.count(a)) remaining.push_back(a);
  }
  if (remaining.size() < static_cast<std::size_t>(K)) {
    throw ExhaustedCandidates("round " + std::to_string(round) + ": only " + std::to_string(remaining.size()) +
                              " candidates left for K = " + std::to_string(K));
  }
  if (spec.mode == CandidateMode::all || static_cast<std::size_t>(spec.sample_size) >= remaining.size()) {
    return remaining;
  }
  if (spec.sample_size < K) throw ConfigError("candidate sample size must be >= K");
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(round)));
  rng.shuffle(remaining);
  remaining.resize(static_cast<std::size_t>(spec.sample_size));
  std::sort(remaining.begin(), remaining.end());
  return remaining;
}

SimulatedEnvironment::SimulatedEnvironment(SimInstance instance, int K)
    : instance_(std::move(instance)), K_(K), ground_(all_items(*instance_.catalog)) {
  require_compatible(instance_.eta_star, *instance_.catalog);
}

std::vector<ItemId> SimulatedEnvironment::candidates(int round) {
  static const std::set<ItemId> kNothingConsumed;
  return candidate_set(round, ground_, kNothingConsumed, instance_.candidates, K_,
                       derive_seed(instance_.seed, 0x63616e64ULL));
}

std::vector<double> SimulatedEnvironment::feedback(const Slate& slate, int round) {
  return bernoulli_feedback(slate, instance_, derive_seed(instance_.seed, static_cast<std::uint64_t>(round)),
                            &clamp_hits_);
}

std::optional<double> SimulatedEnvironment::true_utility(const Slate& slate) const {
  return utility(slate, instance_.eta_star, *instance_.catalog);
}

ReplayEnvironment::ReplayEnvironment(std::shared_ptr<const ItemCatalog> catalog, std::vector<ItemId> ground,
                                     ReplayUser user, int K)
    : catalog_(std::move(catalog)), ground_(std::move(ground)), user_(std::move(user)), K_(K) {
  for (ItemId a : ground_) catalog_->require_valid(a);
}

std::vector<ItemId> ReplayEnvironment::candidates(int round) {
  return candidate_set(round, ground_, user_.consumed, CandidateSpec{}, K_, 0);
}

std::vector<double> ReplayEnvironment::feedback(const Slate& slate, int /*round*/) {
  return replay_feedback(slate, user_);
}

void TrialLog::write_csv(std::ostream& out) const {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "t,position,item_id,reward,width\n";
  for (const auto& round : rounds) {
    for (std::size_t k = 0; k < round.slate.size(); ++k) {
      out << round.t << ',' << (k + 1) << ',' << round.slate[k] << ',' << round.rewards[k] << ',';
      if (k < round.widths.size()) out << round.widths[k];
      out << '\n';
    }
  }
}

EpisodeError::EpisodeError(int round, const std::string& what)
    : Error("round " + std::to_string(round) + ": " + what), round_(round) {}

TrialLog run_episode(Policy& policy, Environment& environment, int rounds, int K) {
  TrialLog log;
  const ItemCatalog& catalog = environment.catalog();
  for (int t = 1; t <= rounds; ++t) {
    TrialRound row;
    row.t = t;
    std::vector<ItemId> candidates;
    try {
      candidates = environment.candidates(t);
    } catch (const ExhaustedCandidates&) {
      log.exhausted = true;
      break;
    }
    try {
      Recommendation rec = policy.select(candidates, t);
      if (rec.slate.size() != static_cast<std::size_t>(K)) {
        throw ProtocolViolation(policy.name() + " returned " + std::to_string(rec.slate.size()) + " items, expected " +
                                std::to_string(K));
      }
      for (ItemId a : rec.slate) {
        if (std::find(candidates.begin(), candidates.end(), a) == candidates.end()) {
          throw ProtocolViolation(policy.name() + " recommended non-candidate item " + std::to_string(a));
        }
      }
      std::vector<double> rewards = environment.feedback(rec.slate, t);
      policy.observe(rec, rewards);

      row.candidate_count = candidates.size();
      if (environment.keeps_candidates()) row.candidates = std::move(candidates);
      row.slate.assign(rec.slate.begin(), rec.slate.end());
      row.rewards = std::move(rewards);
      if (rec.features.empty()) {
        for (std::size_t k = 0; k < rec.slate.size(); ++k) {
          row.features.push_back(joint_marginal(rec.slate[k], rec.slate.items().first(k), catalog));
        }
      } else {
        row.features = std::move(rec.features);
      }
      row.widths = std::move(rec.widths);
      row.true_utility = environment.true_utility(rec.slate);
    } catch (const Error& e) {
      std::throw_with_nested(EpisodeError(t, e.what()));
    }
    log.rounds.push_back(std::move(row));
  }
  log.clamp_hits = environment.clamp_hits();
  return log;
}

}  // namespace lmdb
