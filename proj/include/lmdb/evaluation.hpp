#pragma once

#include "lmdb/environments.hpp"
#include "lmdb/features.hpp"
#include "lmdb/greedy.hpp"

#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace lmdb {

/// A metric averaged over the users still active at round t.
struct UserAverage {
  double value = 0.0;
  int users = 0;     // users contributing
  int excluded = 0;  // users skipped (empty positive set)
};

/// Recall(t) = Σ_{ℓ≤t} |A_ℓ ∩ I| / |I| per user, averaged over users whose
/// episode reached round t. Users with empty I are excluded and counted.
UserAverage recall_at(std::span<const TrialLog> logs, std::span<const std::set<ItemId>> positives, int t);

/// Mean pairwise raw cosine distance of one slate. Throws UndefinedDiversity
/// for slates shorter than 2.
double slate_diversity(std::span<const ItemId> slate, const ItemCatalog& catalog);

/// Diversity(t): slate_diversity averaged over rounds 1..t, then over users.
/// Always the raw cosine distance between relevance vectors, whatever metric
/// the catalog carries.
UserAverage diversity_at(std::span<const TrialLog> logs, const ItemCatalog& catalog, int t);

/// (1+β²)·R·D / (β²·D + R); 0 when both are 0.
double f_beta_at(double recall, double diversity, double beta);

struct MetricRow {
  int round = 0;
  std::string metric;  // recall | diversity | f_beta
  std::optional<double> beta;
  double value = 0.0;
  int users = 0;
};

struct MetricSeries {
  std::vector<MetricRow> rows;
  int excluded_users = 0;
};

/// Recall, Diversity, and F_β for every β in `betas`, for rounds 1..rounds.
/// Rounds no user reached are omitted.
MetricSeries compute_metric_series(std::span<const TrialLog> logs, std::span<const std::set<ItemId>> positives,
                                   const ItemCatalog& catalog, int rounds, std::span<const double> betas);

/// Columns round, metric, beta, value, n_users.
void write_metrics_csv(std::ostream& out, const MetricSeries& series);

enum class OptimumMode { exhaustive, greedy_oracle };

OptimumMode parse_optimum_mode(const std::string& text);
std::string to_string(OptimumMode mode);

struct RegretConfig {
  double gamma = 0.25;
  OptimumMode optimum = OptimumMode::exhaustive;
  std::uint64_t subset_budget = kDefaultSubsetBudget;
};

struct RegretSeries {
  std::vector<double> scaled;  // cumulative Σ F(A*_t) − F(A_t)/γ
  std::vector<double> raw;     // cumulative Σ F(A*_t) − F(A_t)
};

/// Cumulative regret of a simulated episode against the per-round optimum
/// over that round's candidates. In greedy-oracle mode A*_t is the true-η*
/// greedy slate, so the result is a lower bound on the true regret.
RegretSeries scaled_regret(const TrialLog& log, const SimInstance& instance, const RegretConfig& config,
                           int slate_size);

/// Element-wise mean of equally long series.
RegretSeries average_regret(std::span<const RegretSeries> runs);

struct RegretRow {
  int round = 0;
  double scaled_regret = 0.0;
  double raw_regret = 0.0;
  std::optional<double> bound;
  std::optional<double> width_sum;
  std::optional<double> width_budget;
};

/// Columns round, scaled_regret, raw_regret, bound, width_sum, width_budget.
void write_regret_csv(std::ostream& out, std::span<const RegretRow> rows);

}  // namespace lmdb
