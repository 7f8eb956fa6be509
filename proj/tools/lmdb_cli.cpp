// lmdb: simulate | replay | approx-ratio | ingest
//
// Every run writes manifest.toml into its output directory. Feeding it back
// with --config re-runs the same experiment:
//   lmdb --config out/manifest.toml

#include "lmdb/errors.hpp"
#include "lmdb/experiments.hpp"
#include "lmdb/kernels.hpp"

#include <CLI11.hpp>

#include <omp.h>

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Common {
  std::uint64_t seed = 0;
  std::string out = "out";
  int workers = 0;
};

struct PolicyFlags {
  std::string policy = "lmdh";
  double lambda = 1.0;
  std::string alpha = "1";
  double epsilon = 0.05;
  double mmr_alpha = 0.9;
};

struct DatasetFlags {
  std::string dataset;
  std::string format = "ml100k";
  double threshold = 3.0;
  int top_items = 0;
  double train_fraction = 0.8;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Experiment seed")->envname("LMDB_SEED")->capture_default_str();
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
  cmd->add_option("--workers", c.workers, "Worker threads (0 = available parallelism)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
}

void add_policy(CLI::App* cmd, PolicyFlags& p) {
  cmd->add_option("--policy", p.policy, "lmdh | logrank | mmr | egreedy")
      ->check(CLI::IsMember({"lmdh", "logrank", "mmr", "egreedy"}))
      ->capture_default_str();
  cmd->add_option("--lambda", p.lambda, "Ridge regularizer")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--alpha", p.alpha, "Exploration constant, a number or 'theory'")->capture_default_str();
  cmd->add_option("--epsilon", p.epsilon, "Exploration rate of egreedy")->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--mmr-alpha", p.mmr_alpha, "Relevance weight of mmr")->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
}

void add_dataset(CLI::App* cmd, DatasetFlags& d, bool with_top_items = true) {
  cmd->add_option("--dataset", d.dataset, "Ratings file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--format", d.format, "ml100k | ml1m | csv")
      ->check(CLI::IsMember({"ml100k", "ml1m", "csv"}))
      ->capture_default_str();
  cmd->add_option("--threshold", d.threshold, "Ratings strictly above this are positives")->capture_default_str();
  if (with_top_items) {
    cmd->add_option("--top-items", d.top_items, "Keep only the N most frequent items (0 = all)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
  }
  cmd->add_option("--train-fraction", d.train_fraction, "Share of users in the training split")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
}

lmdb::PolicyParams policy_params(const PolicyFlags& flags, bool allow_theory, bool& theory) {
  lmdb::PolicyParams p;
  p.name = flags.policy;
  p.lambda = flags.lambda;
  p.epsilon = flags.epsilon;
  p.mmr_alpha = flags.mmr_alpha;
  theory = false;
  if (flags.alpha == "theory") {
    if (!allow_theory) throw lmdb::ConfigError("alpha: 'theory' is only available for simulate");
    theory = true;
    return p;
  }
  try {
    std::size_t used = 0;
    p.alpha = std::stod(flags.alpha, &used);
    if (used != flags.alpha.size()) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw lmdb::ConfigError("alpha: expected a number or 'theory', got '" + flags.alpha + "'");
  }
  if (!(p.alpha >= 0.0)) throw lmdb::ConfigError("alpha must be >= 0");
  return p;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw lmdb::Error("cannot write " + path.string());
  return out;
}

// Unset list options would otherwise be written as a quoted default string
// and come back as an array, so the manifest would change on re-run.
void pin_list_defaults(CLI::App& command) {
  for (CLI::Option* opt : command.get_options()) {
    const std::string def = opt->get_default_str();
    if (opt->count() > 0 || opt->get_expected_max() <= 1 || def.size() < 2 || def.front() != '[') continue;
    std::string item;
    std::istringstream items(def.substr(1, def.size() - 2));
    while (std::getline(items, item, ',')) opt->add_result(item);
  }
}

void write_manifest(CLI::App& command, const fs::path& dir) {
  pin_list_defaults(command);
  std::ofstream out = open_output(dir / "manifest.toml");
  out << "# Re-run with: lmdb --config " << (dir / "manifest.toml").string() << "\n";
  out << "[" << command.get_name() << "]\n";
  out << command.config_to_str(true, false);
}

void print_error(const std::exception& e, int depth = 0) {
  std::cerr << (depth == 0 ? "error: " : "  caused by: ") << e.what() << '\n';
  try {
    std::rethrow_if_nested(e);
  } catch (const std::exception& inner) {
    print_error(inner, depth + 1);
  } catch (...) {
  }
}

lmdb::ReplayConfig replay_config(const DatasetFlags& d) {
  lmdb::ReplayConfig c;
  c.dataset = d.dataset;
  c.format = lmdb::parse_rating_format(d.format);
  c.threshold = d.threshold;
  if (d.top_items > 0) c.top_items = d.top_items;
  c.train_fraction = d.train_fraction;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear modular dispersion bandits: simulation, replay and greedy-ratio experiments"};
  app.set_config("--config", "", "Manifest (TOML) of a previous run");
  app.require_subcommand(1);

  // simulate
  Common sim_common;
  PolicyFlags sim_policy;
  int sim_k = 5;
  int sim_rounds = 1000;
  int sim_runs = 20;
  int sim_items = 20;
  int sim_dim = 10;
  int sim_sample = 0;
  std::string sim_metric = "slate-normalized";
  std::string sim_optimum = "exhaustive";
  double sim_delta = 0.0;
  bool sim_logs = false;
  auto* simulate = app.add_subcommand("simulate", "Synthetic Bernoulli users; writes regret.csv");
  add_common(simulate, sim_common);
  add_policy(simulate, sim_policy);
  simulate->add_option("--k,--K", sim_k, "Slate size")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--rounds", sim_rounds, "Rounds per run")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--runs", sim_runs, "Independent runs")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--items", sim_items, "Ground set size")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--dim", sim_dim, "Relevance feature dimension")->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--candidate-sample", sim_sample, "Offer a random subset of this size per round (0 = all)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  simulate->add_option("--metric-mode", sim_metric, "raw | slate-normalized")
      ->check(CLI::IsMember({"raw", "slate-normalized"}))
      ->capture_default_str();
  simulate->add_option("--optimum", sim_optimum, "exhaustive | greedy-oracle")
      ->check(CLI::IsMember({"exhaustive", "greedy-oracle"}))
      ->capture_default_str();
  simulate->add_option("--delta", sim_delta, "Confidence level of the theory constants (0 = 1/(nK))")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  simulate->add_flag("--logs", sim_logs, "Also write per-run trial logs");

  // replay
  Common rep_common;
  PolicyFlags rep_policy;
  rep_policy.lambda = 50.0;
  DatasetFlags rep_data;
  std::string rep_embeddings;
  int rep_dim = 10;
  int rep_k = 10;
  int rep_rounds = 30;
  std::string rep_metric = "slate-normalized";
  std::vector<double> rep_betas{1.0, 2.0};
  bool rep_logs = false;
  auto* replay = app.add_subcommand("replay", "Offline replay on a ratings file; writes metrics.csv");
  add_common(replay, rep_common);
  add_policy(replay, rep_policy);
  add_dataset(replay, rep_data);
  replay->add_option("--embeddings", rep_embeddings, "Item embeddings CSV (default: spectral factors of train)")
      ->check(CLI::Validator(
          [](std::string& path) { return path.empty() ? std::string{} : CLI::ExistingFile(path); }, "FILE"));
  replay->add_option("--embedding-dim", rep_dim, "Embedding dimension")->check(CLI::PositiveNumber)
      ->capture_default_str();
  replay->add_option("--k,--K", rep_k, "Slate size")->check(CLI::Range(2, 1000000))->capture_default_str();
  replay->add_option("--rounds", rep_rounds, "Rounds per user")->check(CLI::PositiveNumber)->capture_default_str();
  replay->add_option("--metric-mode", rep_metric, "raw | slate-normalized")
      ->check(CLI::IsMember({"raw", "slate-normalized"}))
      ->capture_default_str();
  replay->add_option("--beta", rep_betas, "F-beta weights")->capture_default_str();
  replay->add_flag("--logs", rep_logs, "Also write per-user trial logs");

  // approx-ratio
  Common ratio_common;
  std::vector<int> ratio_k{2, 3, 4, 5};
  int ratio_users = 100;
  int ratio_items = 20;
  int ratio_dim = 10;
  std::string ratio_metric = "slate-normalized";
  auto* ratio = app.add_subcommand("approx-ratio", "Greedy against exhaustive search; writes ratios.csv");
  add_common(ratio, ratio_common);
  ratio->add_option("--k,--K", ratio_k, "Slate sizes")->check(CLI::PositiveNumber)->capture_default_str();
  ratio->add_option("--users", ratio_users, "Random users")->check(CLI::PositiveNumber)->capture_default_str();
  ratio->add_option("--items", ratio_items, "Random items")->check(CLI::PositiveNumber)->capture_default_str();
  ratio->add_option("--dim", ratio_dim, "Relevance feature dimension")->check(CLI::PositiveNumber)
      ->capture_default_str();
  ratio->add_option("--metric-mode", ratio_metric, "raw | slate-normalized")
      ->check(CLI::IsMember({"raw", "slate-normalized"}))
      ->capture_default_str();

  // ingest
  Common ing_common;
  DatasetFlags ing_data;
  auto* ingest = app.add_subcommand("ingest", "Parse, filter and split a ratings file; prints dataset statistics");
  add_common(ingest, ing_common);
  add_dataset(ingest, ing_data);

  for (CLI::App* cmd : {simulate, replay, ratio, ingest}) cmd->configurable();

  CLI11_PARSE(app, argc, argv);

  try {
    Common* common = simulate->parsed() ? &sim_common
                     : replay->parsed() ? &rep_common
                     : ratio->parsed()  ? &ratio_common
                                        : &ing_common;
    const int workers = common->workers > 0 ? common->workers : omp_get_num_procs();
    lmdb::set_parallel_workers(workers);
    const fs::path out_dir(common->out);
    fs::create_directories(out_dir);
    std::cout << std::setprecision(6);

    if (simulate->parsed()) {
      lmdb::SimulationConfig c;
      bool theory = false;
      c.policy = policy_params(sim_policy, true, theory);
      c.theory_alpha = theory;
      c.items = sim_items;
      c.relevance_dim = sim_dim;
      c.slate_size = sim_k;
      c.rounds = sim_rounds;
      c.runs = sim_runs;
      c.metric_mode = lmdb::parse_metric_mode(sim_metric);
      c.optimum = lmdb::parse_optimum_mode(sim_optimum);
      if (sim_sample > 0) c.candidates = {lmdb::CandidateMode::sampled, sim_sample};
      c.delta = sim_delta;
      c.seed = sim_common.seed;

      const lmdb::SimulationResult result = lmdb::run_simulation(c);
      std::ofstream csv = open_output(out_dir / "regret.csv");
      lmdb::write_regret_csv(csv, result.rows);
      if (sim_logs) {
        fs::create_directories(out_dir / "logs");
        for (std::size_t r = 0; r < result.runs.size(); ++r) {
          std::ofstream log = open_output(out_dir / "logs" / ("run_" + std::to_string(r) + ".csv"));
          result.runs[r].log.write_csv(log);
        }
      }
      const auto& last = result.rows.back();
      std::cout << "policy " << c.policy.name << ", alpha " << result.alpha << " (theory " << result.theoretical_alpha
                << "), " << c.runs << " runs x " << c.rounds << " rounds\n";
      std::cout << "regret(" << last.round << ") raw " << last.raw_regret << ", scaled " << last.scaled_regret
                << ", bound " << last.bound.value_or(std::numeric_limits<double>::quiet_NaN()) << '\n';
      if (result.clamp_hits > 0) std::cout << "clamped click means: " << result.clamp_hits << '\n';
    } else if (replay->parsed()) {
      lmdb::ReplayConfig c = replay_config(rep_data);
      bool theory = false;
      c.policy = policy_params(rep_policy, false, theory);
      if (!rep_embeddings.empty()) c.embeddings = fs::path(rep_embeddings);
      c.embedding_dim = rep_dim;
      c.slate_size = rep_k;
      c.rounds = rep_rounds;
      c.metric_mode = lmdb::parse_metric_mode(rep_metric);
      c.betas = rep_betas;
      c.seed = rep_common.seed;
      for (double b : c.betas) {
        if (!(b > 0.0)) throw lmdb::ConfigError("beta: every value must be > 0");
      }

      const lmdb::ReplayResult result = lmdb::run_replay(c);
      std::ofstream csv = open_output(out_dir / "metrics.csv");
      lmdb::write_metrics_csv(csv, result.series);
      if (rep_logs) {
        fs::create_directories(out_dir / "logs");
        for (std::size_t u = 0; u < result.logs.size(); ++u) {
          std::ofstream log = open_output(out_dir / "logs" / ("user_" + std::to_string(result.users[u]) + ".csv"));
          result.logs[u].write_csv(log);
        }
      }
      std::cout << "policy " << c.policy.name << ": " << result.users.size() << " test users evaluated, "
                << result.excluded_users << " excluded (no held-out positives), " << result.ground.size()
                << " candidate items\n";
      for (auto it = result.series.rows.rbegin(); it != result.series.rows.rend(); ++it) {
        if (it->round != result.series.rows.back().round) break;
        if (it->metric != "f_beta") std::cout << it->metric << "(" << it->round << ") = " << it->value << '\n';
      }
    } else if (ratio->parsed()) {
      lmdb::RatioStudyConfig c;
      c.users = ratio_users;
      c.items = ratio_items;
      c.relevance_dim = ratio_dim;
      c.slate_sizes = ratio_k;
      c.metric_mode = lmdb::parse_metric_mode(ratio_metric);
      c.seed = ratio_common.seed;

      const lmdb::RatioStudyResult result = lmdb::run_ratio_study(c);
      std::ofstream csv = open_output(out_dir / "ratios.csv");
      csv << std::setprecision(std::numeric_limits<double>::max_digits10);
      csv << "k,user,greedy_utility,optimal_utility,ratio,guarantee_applies\n";
      for (const auto& row : result.rows) {
        csv << row.slate_size << ',' << row.user << ',' << row.greedy_value << ',' << row.optimal_value << ','
            << row.ratio << ',' << (row.guarantee_applies ? 1 : 0) << '\n';
      }
      for (const auto& s : result.summaries) {
        std::cout << "K=" << s.slate_size << ": mean ratio " << std::fixed << std::setprecision(4) << s.mean_ratio
                  << ", min " << s.min_ratio << " over " << s.users << " users\n"
                  << std::defaultfloat;
      }
    } else {
      lmdb::InteractionTable table =
          lmdb::parse_ratings(ing_data.dataset, lmdb::parse_rating_format(ing_data.format), ing_data.threshold);
      if (ing_data.top_items > 0) table = lmdb::keep_top_items(table, ing_data.top_items);
      const lmdb::UserSplit split = lmdb::split_users(table, {ing_common.seed, ing_data.train_fraction});
      const lmdb::IngestSummary s = lmdb::summarize(table, split);
      lmdb::write_id_maps(table, out_dir);
      std::ofstream summary = open_output(out_dir / "summary.csv");
      summary << "users,items,interactions,records,duplicates,below_threshold,train_users,test_users\n"
              << s.users << ',' << s.items << ',' << s.interactions << ',' << s.counts.records << ','
              << s.counts.duplicates << ',' << s.counts.below_threshold << ',' << s.train_users << ','
              << s.test_users << '\n';
      std::cout << s.line() << '\n';
    }
    for (CLI::App* cmd : {simulate, replay, ratio, ingest}) {
      if (cmd->parsed()) write_manifest(*cmd, out_dir);
    }
  } catch (const std::exception& e) {
    print_error(e);
    return 1;
  }
  return 0;
}
