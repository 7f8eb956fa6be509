#pragma once

// Experiment drivers behind the command-line tool. Each takes a fully
// resolved config and is deterministic given its seed, whatever the worker
// count.

#include "lmdb/environments.hpp"
#include "lmdb/evaluation.hpp"
#include "lmdb/features.hpp"
#include "lmdb/ingest.hpp"
#include "lmdb/kernels.hpp"
#include "lmdb/lmdh.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lmdb {

/// Hyperparameters shared by every policy factory.
struct PolicyParams {
  std::string name = "lmdh";  // lmdh | logrank | mmr | egreedy
  double lambda = 50.0;
  double alpha = 1.0;
  double epsilon = 0.05;
  double mmr_alpha = 0.9;
  std::uint64_t seed = 0;
};

/// Builds a policy over `catalog`. `mean_user` feeds the static scorer of the
/// baselines and is ignored by LMDH.
std::unique_ptr<Policy> make_policy(const PolicyParams& params, std::shared_ptr<const ItemCatalog> catalog,
                                    const Vector& mean_user, int K, Execution exec);

void validate_policy_name(const std::string& name);

struct SimulationConfig {
  PolicyParams policy{"lmdh", 1.0, 1.0, 0.05, 0.9, 0};
  bool theory_alpha = false;  // replace policy.alpha with the confidence-set α
  int items = 20;
  int relevance_dim = 10;
  int slate_size = 5;
  int rounds = 1000;
  int runs = 20;
  double feature_low = 0.0;
  double feature_high = 0.5;
  double preference_low = 0.0;
  double preference_high = 0.2;
  MetricMode metric_mode = MetricMode::slate_normalized;
  OptimumMode optimum = OptimumMode::exhaustive;
  CandidateSpec candidates;
  double delta = 0.0;  // 0 selects 1/(nK)
  double eta_norm_bound = 1.0;
  std::uint64_t seed = 0;
};

/// Item features U[low, high)^d, preferences θ* U[low, high)^d and
/// β* U[low, high), all from the run's derived seed.
SimInstance make_sim_instance(const SimulationConfig& config, int run);

TheoryParams simulation_theory(const SimulationConfig& config, long horizon);

struct SimulationRun {
  SimInstance instance;
  TrialLog log;
  RegretSeries regret;
  std::vector<double> width_sum;  // cumulative Σ_k √v, LMDH only
};

struct SimulationResult {
  std::vector<RegretRow> rows;  // averaged over runs
  std::vector<SimulationRun> runs;
  double alpha = 0.0;
  double theoretical_alpha = 0.0;
  std::size_t clamp_hits = 0;
};

SimulationResult run_simulation(const SimulationConfig& config, Execution exec = Execution::parallel);

struct ReplayConfig {
  std::filesystem::path dataset;
  RatingFormat format = RatingFormat::ml100k_tab;
  double threshold = 3.0;
  std::optional<int> top_items;
  std::optional<std::filesystem::path> embeddings;
  int embedding_dim = 10;
  PolicyParams policy;
  int slate_size = 10;
  int rounds = 30;
  MetricMode metric_mode = MetricMode::slate_normalized;
  std::vector<double> betas{1.0, 2.0};
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
};

struct ReplayResult {
  MetricSeries series;
  std::shared_ptr<const ItemCatalog> catalog;
  std::vector<ItemId> ground;             // catalog ids offered at round 1
  std::vector<int> users;                 // dense ids of evaluated test users
  std::vector<std::set<ItemId>> positives;
  std::vector<TrialLog> logs;
  int test_users = 0;
  int excluded_users = 0;  // test users with no positives among candidate items
};

ReplayResult run_replay(const ReplayConfig& config, Execution exec = Execution::parallel);
ReplayResult run_replay(const InteractionTable& table, const ReplayConfig& config, Execution exec = Execution::parallel);

struct RatioStudyConfig {
  int users = 100;
  int items = 20;
  int relevance_dim = 10;
  std::vector<int> slate_sizes{2, 3, 4, 5};
  double feature_low = 0.0;
  double feature_high = 0.5;
  double preference_low = 0.0;
  double preference_high = 0.2;
  MetricMode metric_mode = MetricMode::slate_normalized;
  std::uint64_t seed = 0;
  std::uint64_t subset_budget = kDefaultSubsetBudget;
};

struct RatioRow {
  int slate_size = 0;
  int user = 0;
  double greedy_value = 0.0;
  double optimal_value = 0.0;
  double ratio = 0.0;
  bool guarantee_applies = false;
};

struct RatioSummary {
  int slate_size = 0;
  int users = 0;
  double mean_ratio = 0.0;
  double min_ratio = 0.0;
  int below_quarter = 0;  // instances under 1/4 where the guarantee applies
};

struct RatioStudyResult {
  std::vector<RatioRow> rows;
  std::vector<RatioSummary> summaries;
};

/// One shared item set, one preference vector per user; greedy against the
/// exhaustive optimum for every (user, K).
RatioStudyResult run_ratio_study(const RatioStudyConfig& config, Execution exec = Execution::parallel);

struct IngestConfig {
  std::filesystem::path dataset;
  RatingFormat format = RatingFormat::ml100k_tab;
  double threshold = 3.0;
  std::optional<int> top_items;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
};

struct IngestSummary {
  int users = 0;
  int items = 0;
  std::size_t interactions = 0;
  double density = 0.0;
  int train_users = 0;
  int test_users = 0;
  IngestCounts counts;

  /// "942 users, 1447 items, 55375 interactions"
  std::string line() const;
};

IngestSummary summarize(const InteractionTable& table, const UserSplit& split);

}  // namespace lmdb
