#pragma once

#include "lmdb/errors.hpp"
#include "lmdb/features.hpp"
#include "lmdb/policy.hpp"
#include "lmdb/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace lmdb {

enum class CandidateMode { all, sampled };

struct CandidateSpec {
  CandidateMode mode = CandidateMode::all;
  int sample_size = 0;  // used by sampled mode
};

/// Hidden-truth simulation world.
struct SimInstance {
  std::shared_ptr<const ItemCatalog> catalog;
  PreferenceVector eta_star;
  std::uint64_t seed = 0;
  CandidateSpec candidates;
};

/// Position k clicks with probability clamp(η*ᵀΔ(a_k | a_1..a_{k-1}), 0, 1),
/// independently across positions. `clamp_hits` counts positions whose mean
/// had to be clamped.
std::vector<double> bernoulli_feedback(const Slate& slate, const SimInstance& instance, Rng& rng,
                                       std::size_t* clamp_hits = nullptr);
std::vector<double> bernoulli_feedback(const Slate& slate, const SimInstance& instance, std::uint64_t seed,
                                       std::size_t* clamp_hits = nullptr);

/// Clamped Bernoulli means for every position of the slate.
std::vector<double> click_means(const Slate& slate, const SimInstance& instance);

/// Offline replay user: held-out positives I and everything recommended so far.
struct ReplayUser {
  int user_id = 0;
  std::set<ItemId> positives;
  std::set<ItemId> consumed;
};

/// Reward 1 at position k iff a_k ∈ I; appends the slate to `consumed`.
/// Throws ProtocolViolation if the slate repeats a consumed item.
std::vector<double> replay_feedback(const Slate& slate, ReplayUser& user);

/// E_t = ground \ consumed, or a seeded uniform subset of it in sampled mode
/// (returned in ascending order). Throws ExhaustedCandidates when fewer than
/// K items remain.
std::vector<ItemId> candidate_set(int round, std::span<const ItemId> ground, const std::set<ItemId>& consumed,
                                  const CandidateSpec& spec, int K, std::uint64_t seed);

class Environment {
 public:
  virtual ~Environment() = default;
  virtual const ItemCatalog& catalog() const = 0;
  virtual std::vector<ItemId> candidates(int round) = 0;
  virtual std::vector<double> feedback(const Slate& slate, int round) = 0;
  /// F(A|η*) when the truth is known (simulation only).
  virtual std::optional<double> true_utility(const Slate&) const { return std::nullopt; }
  /// Whether the round's candidate list should be kept in the log.
  virtual bool keeps_candidates() const { return false; }
  virtual std::size_t clamp_hits() const { return 0; }
};

/// Every round offers the full ground set (or a seeded sample of it); items
/// are not consumed, so the same user can be served for any horizon.
class SimulatedEnvironment final : public Environment {
 public:
  SimulatedEnvironment(SimInstance instance, int K);

  const ItemCatalog& catalog() const override { return *instance_.catalog; }
  std::vector<ItemId> candidates(int round) override;
  std::vector<double> feedback(const Slate& slate, int round) override;
  std::optional<double> true_utility(const Slate& slate) const override;
  bool keeps_candidates() const override { return true; }
  std::size_t clamp_hits() const override { return clamp_hits_; }
  const SimInstance& instance() const { return instance_; }

 private:
  SimInstance instance_;
  int K_;
  std::vector<ItemId> ground_;
  std::size_t clamp_hits_ = 0;
};

class ReplayEnvironment final : public Environment {
 public:
  ReplayEnvironment(std::shared_ptr<const ItemCatalog> catalog, std::vector<ItemId> ground, ReplayUser user, int K);

  const ItemCatalog& catalog() const override { return *catalog_; }
  std::vector<ItemId> candidates(int round) override;
  std::vector<double> feedback(const Slate& slate, int round) override;
  const ReplayUser& user() const { return user_; }

 private:
  std::shared_ptr<const ItemCatalog> catalog_;
  std::vector<ItemId> ground_;
  ReplayUser user_;
  int K_;
};

struct TrialRound {
  int t = 0;
  std::size_t candidate_count = 0;
  std::vector<ItemId> candidates;  // simulation only
  std::vector<ItemId> slate;
  std::vector<double> rewards;
  std::vector<Vector> features;  // [z; x] per position
  std::vector<double> widths;    // LMDH only
  std::optional<double> true_utility;
};

struct TrialLog {
  std::vector<TrialRound> rounds;
  bool exhausted = false;  // episode ended early for lack of candidates
  std::size_t clamp_hits = 0;

  /// Columns t, position, item_id, reward, width (empty for baselines).
  void write_csv(std::ostream& out) const;
};

/// Error raised inside an episode, tagged with the round it happened in.
/// The original exception is attached via std::nested_exception.
class EpisodeError : public Error {
 public:
  EpisodeError(int round, const std::string& what);
  int round() const { return round_; }

 private:
  int round_;
};

/// Runs rounds t = 1..n. Stops early (exhausted = true) if the environment
/// runs out of candidates.
TrialLog run_episode(Policy& policy, Environment& environment, int rounds, int K);

}  // namespace lmdb
