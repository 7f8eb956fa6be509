#include "lmdb/evaluation.hpp"

#include "lmdb/errors.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>

namespace lmdb {

namespace {

// Sum in sorted order so the result does not depend on user order.
double order_free_mean(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

void require_round(int t) {
  if (t < 1) throw PreconditionViolation("round index must be >= 1");
}

void write_optional(std::ostream& out, const std::optional<double>& value) {
  if (value) out << *value;
}

}  // namespace

UserAverage recall_at(std::span<const TrialLog> logs, std::span<const std::set<ItemId>> positives, int t) {
  require_round(t);
  if (logs.size() != positives.size()) throw DimensionMismatch("one positive set per log is required");
  UserAverage out;
  std::vector<double> per_user;
  for (std::size_t u = 0; u < logs.size(); ++u) {
    if (positives[u].empty()) {
      ++out.excluded;
      continue;
    }
    if (logs[u].rounds.size() < static_cast<std::size_t>(t)) continue;
    std::size_t hits = 0;
    for (int r = 0; r < t; ++r) {
      for (ItemId a : logs[u].rounds[r].slate) hits += positives[u].count(a);
    }
    per_user.push_back(static_cast<double>(hits) / static_cast<double>(positives[u].size()));
  }
  out.users = static_cast<int>(per_user.size());
  out.value = order_free_mean(std::move(per_user));
  return out;
}

double slate_diversity(std::span<const ItemId> slate, const ItemCatalog& catalog) {
  if (slate.size() < 2) throw UndefinedDiversity("diversity needs a slate of at least 2 items");
  double total = 0.0;
  for (std::size_t p = 0; p < slate.size(); ++p) {
    for (std::size_t q = p + 1; q < slate.size(); ++q) {
      total += cosine_distance(catalog.relevance(slate[p]), catalog.relevance(slate[q]));
    }
  }
  const double k = static_cast<double>(slate.size());
  return 2.0 / (k * (k - 1.0)) * total;
}

UserAverage diversity_at(std::span<const TrialLog> logs, const ItemCatalog& catalog, int t) {
  require_round(t);
  UserAverage out;
  std::vector<double> per_user;
  for (const auto& log : logs) {
    if (log.rounds.size() < static_cast<std::size_t>(t)) continue;
    double total = 0.0;
    for (int r = 0; r < t; ++r) total += slate_diversity(log.rounds[r].slate, catalog);
    per_user.push_back(total / t);
  }
  out.users = static_cast<int>(per_user.size());
  out.value = order_free_mean(std::move(per_user));
  return out;
}

double f_beta_at(double recall, double diversity, double beta) {
  if (!(beta > 0.0)) throw PreconditionViolation("beta must be > 0");
  const double b2 = beta * beta;
  const double denominator = b2 * diversity + recall;
  if (denominator == 0.0) return 0.0;
  return (1.0 + b2) * recall * diversity / denominator;
}

MetricSeries compute_metric_series(std::span<const TrialLog> logs, std::span<const std::set<ItemId>> positives,
                                   const ItemCatalog& catalog, int rounds, std::span<const double> betas) {
  if (logs.size() != positives.size()) throw DimensionMismatch("one positive set per log is required");
  MetricSeries series;
  for (const auto& p : positives) series.excluded_users += p.empty() ? 1 : 0;

  // Users with no positives carry no recall signal; drop them from diversity too
  // so every metric averages over the same population.
  std::vector<TrialLog> kept_logs;
  std::vector<std::set<ItemId>> kept_positives;
  for (std::size_t u = 0; u < logs.size(); ++u) {
    if (positives[u].empty()) continue;
    kept_logs.push_back(logs[u]);
    kept_positives.push_back(positives[u]);
  }

  for (int t = 1; t <= rounds; ++t) {
    const UserAverage recall = recall_at(kept_logs, kept_positives, t);
    if (recall.users == 0) break;
    const UserAverage diversity = diversity_at(kept_logs, catalog, t);
    series.rows.push_back({t, "recall", std::nullopt, recall.value, recall.users});
    series.rows.push_back({t, "diversity", std::nullopt, diversity.value, diversity.users});
    for (double beta : betas) {
      series.rows.push_back({t, "f_beta", beta, f_beta_at(recall.value, diversity.value, beta), recall.users});
    }
  }
  return series;
}

void write_metrics_csv(std::ostream& out, const MetricSeries& series) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "round,metric,beta,value,n_users\n";
  for (const auto& row : series.rows) {
    out << row.round << ',' << row.metric << ',';
    write_optional(out, row.beta);
    out << ',' << row.value << ',' << row.users << '\n';
  }
}

OptimumMode parse_optimum_mode(const std::string& text) {
  if (text == "exhaustive") return OptimumMode::exhaustive;
  if (text == "greedy-oracle") return OptimumMode::greedy_oracle;
  throw ConfigError("unknown optimum mode '" + text + "' (expected exhaustive or greedy-oracle)");
}

std::string to_string(OptimumMode mode) {
  return mode == OptimumMode::exhaustive ? "exhaustive" : "greedy-oracle";
}

RegretSeries scaled_regret(const TrialLog& log, const SimInstance& instance, const RegretConfig& config,
                           int slate_size) {
  if (!(config.gamma > 0.0 && config.gamma <= 1.0)) throw PreconditionViolation("gamma must lie in (0, 1]");
  const ItemCatalog& catalog = *instance.catalog;
  std::map<std::vector<ItemId>, double> optimum_cache;
  const std::vector<ItemId> everything = all_items(catalog);

  RegretSeries series;
  double scaled = 0.0;
  double raw = 0.0;
  for (const auto& round : log.rounds) {
    const std::vector<ItemId>& candidates = round.candidates.empty() ? everything : round.candidates;
    auto it = optimum_cache.find(candidates);
    if (it == optimum_cache.end()) {
      double best = 0.0;
      if (config.optimum == OptimumMode::exhaustive) {
        best = exhaustive_optimum(instance.eta_star, catalog, candidates, slate_size, config.subset_budget).value;
      } else {
        best = utility(greedy_select(instance.eta_star, catalog, candidates, slate_size).slate, instance.eta_star,
                       catalog);
      }
      it = optimum_cache.emplace(candidates, best).first;
    }
    const double achieved = round.true_utility ? *round.true_utility : utility(round.slate, instance.eta_star, catalog);
    scaled += it->second - achieved / config.gamma;
    raw += it->second - achieved;
    series.scaled.push_back(scaled);
    series.raw.push_back(raw);
  }
  return series;
}

RegretSeries average_regret(std::span<const RegretSeries> runs) {
  RegretSeries mean;
  if (runs.empty()) return mean;
  const std::size_t n = runs.front().raw.size();
  for (const auto& run : runs) {
    if (run.raw.size() != n || run.scaled.size() != n) throw DimensionMismatch("regret series lengths differ");
  }
  mean.scaled.assign(n, 0.0);
  mean.raw.assign(n, 0.0);
  for (const auto& run : runs) {
    for (std::size_t t = 0; t < n; ++t) {
      mean.scaled[t] += run.scaled[t];
      mean.raw[t] += run.raw[t];
    }
  }
  const double count = static_cast<double>(runs.size());
  for (std::size_t t = 0; t < n; ++t) {
    mean.scaled[t] /= count;
    mean.raw[t] /= count;
  }
  return mean;
}

void write_regret_csv(std::ostream& out, std::span<const RegretRow> rows) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "round,scaled_regret,raw_regret,bound,width_sum,width_budget\n";
  for (const auto& row : rows) {
    out << row.round << ',' << row.scaled_regret << ',' << row.raw_regret << ',';
    write_optional(out, row.bound);
    out << ',';
    write_optional(out, row.width_sum);
    out << ',';
    write_optional(out, row.width_budget);
    out << '\n';
  }
}

}  // namespace lmdb
