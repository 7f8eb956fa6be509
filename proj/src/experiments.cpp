#include "lmdb/experiments.hpp"

#include "lmdb/baselines.hpp"
#include "lmdb/errors.hpp"
#include "lmdb/greedy.hpp"
#include "lmdb/rng.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <sstream>

namespace lmdb {

namespace {

// Runs fn(i) for i in [0, count). Parallel mode spreads indices over the OpenMP
// pool; every index writes only its own slot, so results do not depend on the
// schedule. The first failure by index is rethrown.
template <class Fn>
void for_each_index(int count, Execution exec, Fn&& fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(std::max(count, 0)));
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    for (int i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Vector uniform_vector(Rng& rng, int n, double low, double high) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.uniform(low, high);
  return v;
}

void require_range(double low, double high, const char* what) {
  if (!(low < high)) throw ConfigError(std::string(what) + ": low must be < high");
}

// Seed-stream tags inside one run.
constexpr std::uint64_t kFeatureStream = 1;
constexpr std::uint64_t kPreferenceStream = 2;
constexpr std::uint64_t kPolicyStream = 3;

}  // namespace

void validate_policy_name(const std::string& name) {
  if (name != "lmdh" && name != "logrank" && name != "mmr" && name != "egreedy") {
    throw ConfigError("policy: unknown policy '" + name + "' (expected lmdh, logrank, mmr or egreedy)");
  }
}

std::unique_ptr<Policy> make_policy(const PolicyParams& params, std::shared_ptr<const ItemCatalog> catalog,
                                    const Vector& mean_user, int K, Execution exec) {
  validate_policy_name(params.name);
  if (params.name == "lmdh") {
    LmdhConfig config;
    config.lambda = params.lambda;
    config.alpha = params.alpha;
    config.relevance_dim = catalog->relevance_dim();
    config.diversity_dim = catalog->diversity_dim();
    config.slate_size = K;
    return std::make_unique<LmdhPolicy>(std::move(catalog), config, exec);
  }
  auto scorer = std::make_shared<const StaticScorer>(*catalog, mean_user);
  if (params.name == "logrank") return std::make_unique<LogRankPolicy>(scorer, K);
  if (params.name == "mmr") return std::make_unique<MmrPolicy>(scorer, std::move(catalog), K, params.mmr_alpha);
  return std::make_unique<EpsilonGreedyPolicy>(scorer, K, params.epsilon, params.seed);
}

SimInstance make_sim_instance(const SimulationConfig& config, int run) {
  require_range(config.feature_low, config.feature_high, "feature range");
  require_range(config.preference_low, config.preference_high, "preference range");
  const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(run));

  const EmbeddingTable items = synthetic_embeddings(config.items, config.relevance_dim, config.feature_low,
                                                    config.feature_high, derive_seed(seed, kFeatureStream));
  std::vector<PairwiseMetric> metrics{PairwiseMetric::cosine(config.metric_mode, config.slate_size)};
  auto catalog = std::make_shared<const ItemCatalog>(items.values, std::move(metrics));

  Rng rng(derive_seed(seed, kPreferenceStream));
  Vector theta = uniform_vector(rng, config.relevance_dim, config.preference_low, config.preference_high);
  Vector beta = uniform_vector(rng, 1, config.preference_low, config.preference_high);

  SimInstance instance;
  instance.catalog = std::move(catalog);
  instance.eta_star = PreferenceVector(std::move(theta), std::move(beta));
  instance.seed = seed;
  instance.candidates = config.candidates;
  return instance;
}

TheoryParams simulation_theory(const SimulationConfig& config, long horizon) {
  TheoryParams p;
  p.horizon = horizon;
  p.slate_size = config.slate_size;
  p.relevance_dim = config.relevance_dim;
  p.diversity_dim = 1;
  p.lambda = config.policy.lambda;
  p.delta = config.delta > 0.0 ? config.delta
                               : 1.0 / (static_cast<double>(config.rounds) * static_cast<double>(config.slate_size));
  p.eta_norm_bound = config.eta_norm_bound;
  p.gamma = 0.25;
  p.validate();
  return p;
}

SimulationResult run_simulation(const SimulationConfig& config, Execution exec) {
  validate_policy_name(config.policy.name);
  if (config.runs < 1) throw ConfigError("runs must be >= 1");
  if (config.rounds < 1) throw ConfigError("rounds must be >= 1");
  if (config.slate_size < 1 || config.slate_size > config.items) throw ConfigError("k must lie in [1, items]");

  SimulationResult result;
  const TheoryParams horizon_params = simulation_theory(config, config.rounds);
  result.theoretical_alpha = theoretical_alpha(horizon_params);
  PolicyParams policy = config.policy;
  if (config.theory_alpha) policy.alpha = result.theoretical_alpha;
  result.alpha = policy.alpha;

  RegretConfig regret_config;
  regret_config.gamma = horizon_params.gamma;
  regret_config.optimum = config.optimum;

  result.runs.resize(static_cast<std::size_t>(config.runs));
  // Runs fan out; each run keeps its own kernels serial.
  for_each_index(config.runs, exec, [&](int r) {
    SimulationRun& run = result.runs[static_cast<std::size_t>(r)];
    run.instance = make_sim_instance(config, r);
    PolicyParams per_run = policy;
    per_run.seed = derive_seed(run.instance.seed, kPolicyStream);
    // Static baselines score items with the true relevance weights.
    auto agent = make_policy(per_run, run.instance.catalog, run.instance.eta_star.theta, config.slate_size,
                             Execution::serial);
    SimulatedEnvironment env(run.instance, config.slate_size);
    run.log = run_episode(*agent, env, config.rounds, config.slate_size);
    run.regret = scaled_regret(run.log, run.instance, regret_config, config.slate_size);
    if (policy.name == "lmdh") {
      double total = 0.0;
      for (const auto& round : run.log.rounds) {
        for (double w : round.widths) total += w;
        run.width_sum.push_back(total);
      }
    }
  });

  std::vector<RegretSeries> series;
  for (const auto& run : result.runs) {
    series.push_back(run.regret);
    result.clamp_hits += run.log.clamp_hits;
  }
  const RegretSeries mean = average_regret(series);

  for (std::size_t t = 0; t < mean.raw.size(); ++t) {
    const long horizon = static_cast<long>(t + 1);
    TheoryParams p = horizon_params;
    p.horizon = horizon;
    RegretRow row;
    row.round = static_cast<int>(horizon);
    row.scaled_regret = mean.scaled[t];
    row.raw_regret = mean.raw[t];
    row.bound = regret_upper_bound(p, theoretical_alpha(p));
    if (policy.name == "lmdh") {
      // Worst run, so the budget check covers every run.
      double worst = 0.0;
      for (const auto& run : result.runs) worst = std::max(worst, run.width_sum[t]);
      row.width_sum = worst;
      row.width_budget = lemma1_width_budget(p);
    }
    result.rows.push_back(row);
  }
  return result;
}

ReplayResult run_replay(const ReplayConfig& config, Execution exec) {
  InteractionTable table = parse_ratings(config.dataset, config.format, config.threshold);
  if (config.top_items) table = keep_top_items(table, *config.top_items);
  return run_replay(table, config, exec);
}

ReplayResult run_replay(const InteractionTable& table, const ReplayConfig& config, Execution exec) {
  validate_policy_name(config.policy.name);
  if (config.slate_size < 2) throw ConfigError("k must be >= 2 for diversity metrics");
  if (config.rounds < 1) throw ConfigError("rounds must be >= 1");
  if (config.embedding_dim < 1) throw ConfigError("embedding dimension must be >= 1");

  const UserSplit split = split_users(table, {config.seed, config.train_fraction});

  // Items seen in training form the ground set; catalog id = rank among them.
  std::vector<int> dense_items;
  for (const auto& rec : split.train.records) dense_items.push_back(rec.item);
  std::sort(dense_items.begin(), dense_items.end());
  dense_items.erase(std::unique(dense_items.begin(), dense_items.end()), dense_items.end());
  if (dense_items.size() < static_cast<std::size_t>(config.slate_size)) {
    throw InsufficientCandidates("training split covers fewer items than k");
  }
  std::map<int, ItemId> catalog_id;
  for (std::size_t i = 0; i < dense_items.size(); ++i) catalog_id[dense_items[i]] = static_cast<ItemId>(i);

  Matrix features;
  if (config.embeddings) {
    const EmbeddingTable loaded = load_embeddings(*config.embeddings, config.embedding_dim);
    std::vector<std::int64_t> raw;
    for (int dense : dense_items) raw.push_back(table.item_ids[static_cast<std::size_t>(dense)]);
    features = loaded.aligned_to(raw);
  } else {
    const EmbeddingTable learned = spectral_embeddings(split.train, config.embedding_dim, config.seed);
    features.resize(learned.dim(), static_cast<Eigen::Index>(dense_items.size()));
    for (std::size_t i = 0; i < dense_items.size(); ++i) {
      features.col(static_cast<Eigen::Index>(i)) = learned.values.col(dense_items[i]);
    }
  }

  ReplayResult result;
  std::vector<PairwiseMetric> metrics{PairwiseMetric::cosine(config.metric_mode, config.slate_size)};
  auto catalog = std::make_shared<const ItemCatalog>(features, std::move(metrics));
  result.catalog = catalog;
  result.ground = all_items(*catalog);

  // ū: mean feature vector over training positives.
  Vector mean_user = Vector::Zero(catalog->relevance_dim());
  for (const auto& rec : split.train.records) mean_user += catalog->relevance(catalog_id.at(rec.item));
  mean_user /= static_cast<double>(split.train.records.size());

  std::map<int, std::set<ItemId>> held_out;
  for (const auto& rec : split.test.records) {
    auto it = catalog_id.find(rec.item);
    if (it != catalog_id.end()) held_out[rec.user].insert(it->second);
  }
  result.test_users = static_cast<int>(split.test_users.size());
  for (int user : split.test_users) {
    auto it = held_out.find(user);
    if (it == held_out.end() || it->second.empty()) {
      ++result.excluded_users;
      continue;
    }
    result.users.push_back(user);
    result.positives.push_back(it->second);
  }

  const int n_users = static_cast<int>(result.users.size());
  result.logs.resize(static_cast<std::size_t>(n_users));
  for_each_index(n_users, exec, [&](int i) {
    PolicyParams params = config.policy;
    params.seed = derive_seed(config.seed, static_cast<std::uint64_t>(result.users[i]));
    auto agent = make_policy(params, catalog, mean_user, config.slate_size, Execution::serial);
    ReplayUser user{result.users[i], result.positives[i], {}};
    ReplayEnvironment env(catalog, result.ground, std::move(user), config.slate_size);
    result.logs[static_cast<std::size_t>(i)] = run_episode(*agent, env, config.rounds, config.slate_size);
  });

  result.series = compute_metric_series(result.logs, result.positives, *catalog, config.rounds, config.betas);
  result.series.excluded_users = result.excluded_users;
  return result;
}

RatioStudyResult run_ratio_study(const RatioStudyConfig& config, Execution exec) {
  if (config.users < 1 || config.items < 1) throw ConfigError("users and items must be >= 1");
  require_range(config.feature_low, config.feature_high, "feature range");
  require_range(config.preference_low, config.preference_high, "preference range");
  for (int K : config.slate_sizes) {
    if (K < 1 || K > config.items) throw ConfigError("k must lie in [1, items]");
  }

  const EmbeddingTable items = synthetic_embeddings(config.items, config.relevance_dim, config.feature_low,
                                                    config.feature_high, derive_seed(config.seed, 0));
  std::vector<PreferenceVector> users;
  for (int u = 0; u < config.users; ++u) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(u) + 1));
    Vector theta = uniform_vector(rng, config.relevance_dim, config.preference_low, config.preference_high);
    Vector beta = uniform_vector(rng, 1, config.preference_low, config.preference_high);
    users.emplace_back(std::move(theta), std::move(beta));
  }

  RatioStudyResult result;
  for (int K : config.slate_sizes) {
    std::vector<PairwiseMetric> metrics{PairwiseMetric::cosine(config.metric_mode, K)};
    const ItemCatalog catalog(items.values, std::move(metrics));
    const std::vector<ItemId> candidates = all_items(catalog);

    std::vector<RatioRow> rows(static_cast<std::size_t>(config.users));
    for_each_index(config.users, exec, [&](int u) {
      const PreferenceVector& eta = users[static_cast<std::size_t>(u)];
      RatioRow& row = rows[static_cast<std::size_t>(u)];
      row.slate_size = K;
      row.user = u;
      row.greedy_value = utility(greedy_select(eta, catalog, candidates, K).slate, eta, catalog);
      row.optimal_value =
          exhaustive_optimum(eta, catalog, candidates, K, config.subset_budget, Execution::serial).value;
      if (row.optimal_value == 0.0) throw DegenerateInstance("optimal utility is 0");
      row.ratio = row.greedy_value / row.optimal_value;
      row.guarantee_applies = approximation_guarantee_holds(eta, catalog);
    });

    RatioSummary summary;
    summary.slate_size = K;
    summary.users = config.users;
    summary.min_ratio = rows.front().ratio;
    double total = 0.0;
    for (const auto& row : rows) {
      total += row.ratio;
      summary.min_ratio = std::min(summary.min_ratio, row.ratio);
      if (row.guarantee_applies && row.ratio < 0.25) ++summary.below_quarter;
    }
    summary.mean_ratio = total / static_cast<double>(rows.size());
    result.summaries.push_back(summary);
    result.rows.insert(result.rows.end(), rows.begin(), rows.end());
  }
  return result;
}

std::string IngestSummary::line() const {
  std::ostringstream out;
  out << users << " users, " << items << " items, " << interactions << " interactions";
  return out.str();
}

IngestSummary summarize(const InteractionTable& table, const UserSplit& split) {
  IngestSummary s;
  s.users = table.user_count();
  s.items = table.item_count();
  s.interactions = table.records.size();
  s.density = s.users > 0 && s.items > 0
                  ? static_cast<double>(s.interactions) / (static_cast<double>(s.users) * s.items)
                  : 0.0;
  s.train_users = static_cast<int>(split.train_users.size());
  s.test_users = static_cast<int>(split.test_users.size());
  s.counts = table.counts;
  return s;
}

}  // namespace lmdb
