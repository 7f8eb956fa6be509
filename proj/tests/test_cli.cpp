#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int status = -1;
  std::string output;
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string command = env + (env.empty() ? "" : " ") + "\"" LMDB_CLI_PATH "\" " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buffer[4096];
  std::size_t n;
  while ((n = fread(buffer, 1, sizeof buffer, pipe)) > 0) r.output.append(buffer, n);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t line_count(const fs::path& path) {
  const std::string text = slurp(path);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("lmdb_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

const std::string kRatings = std::string(LMDB_DATA_DIR) + "/sample_ratings.tsv";
const std::string kEmbeddings = std::string(LMDB_DATA_DIR) + "/sample_embeddings.csv";

}  // namespace

TEST_CASE("help lists the subcommands") {
  const Result r = run("--help");
  CHECK(r.status == 0);
  for (const char* sub : {"simulate", "replay", "approx-ratio", "ingest"}) {
    CHECK(r.output.find(sub) != std::string::npos);
  }
}

TEST_CASE("simulate writes one row per round and re-runs from its manifest") {
  const fs::path out = scratch("simulate");
  const Result r = run("simulate --rounds 30 --runs 2 --items 10 --k 3 --seed 4 --logs --out " + out.string());
  REQUIRE(r.status == 0);
  CHECK(line_count(out / "regret.csv") == 31);
  CHECK(fs::exists(out / "logs" / "run_0.csv"));
  CHECK(fs::exists(out / "logs" / "run_1.csv"));
  const std::string regret = slurp(out / "regret.csv");
  const std::string log = slurp(out / "logs" / "run_1.csv");
  const std::string manifest = slurp(out / "manifest.toml");

  const Result again = run("--config " + (out / "manifest.toml").string());
  REQUIRE(again.status == 0);
  CHECK(slurp(out / "regret.csv") == regret);
  CHECK(slurp(out / "logs" / "run_1.csv") == log);
  CHECK(slurp(out / "manifest.toml") == manifest);
  fs::remove_all(out);
}

TEST_CASE("worker count does not change the output") {
  const fs::path a = scratch("workers_a"), b = scratch("workers_b");
  REQUIRE(run("simulate --rounds 20 --runs 3 --items 10 --k 3 --workers 1 --out " + a.string()).status == 0);
  REQUIRE(run("simulate --rounds 20 --runs 3 --items 10 --k 3 --workers 3 --out " + b.string()).status == 0);
  CHECK(slurp(a / "regret.csv") == slurp(b / "regret.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("seed comes from the environment unless given on the command line") {
  const fs::path a = scratch("seed_a"), b = scratch("seed_b"), c = scratch("seed_c");
  const std::string common = "simulate --rounds 10 --runs 1 --items 8 --k 2 --policy egreedy --epsilon 1 --out ";
  REQUIRE(run(common + a.string(), "LMDB_SEED=9").status == 0);
  REQUIRE(run(common + b.string() + " --seed 9").status == 0);
  REQUIRE(run(common + c.string() + " --seed 10", "LMDB_SEED=9").status == 0);
  CHECK(slurp(a / "regret.csv") == slurp(b / "regret.csv"));
  CHECK(slurp(a / "regret.csv") != slurp(c / "regret.csv"));
  CHECK(slurp(a / "manifest.toml").find("seed=9") != std::string::npos);
  for (const auto& d : {a, b, c}) fs::remove_all(d);
}

TEST_CASE("approx-ratio writes one row per user and slate size") {
  const fs::path out = scratch("ratio");
  const Result r = run("approx-ratio --users 5 --items 8 --k 2 3 --out " + out.string());
  REQUIRE(r.status == 0);
  CHECK(line_count(out / "ratios.csv") == 11);
  CHECK(slurp(out / "ratios.csv").rfind("k,user,greedy_utility,optimal_utility,ratio,guarantee_applies\n", 0) == 0);
  fs::remove_all(out);
}

TEST_CASE("ingest prints the dataset statistics") {
  const fs::path out = scratch("ingest");
  const Result r = run("ingest --dataset " + kRatings + " --out " + out.string());
  REQUIRE(r.status == 0);
  CHECK(r.output.find("60 users, 120 items, 1313 interactions") != std::string::npos);
  CHECK(fs::exists(out / "users.map.csv"));
  CHECK(fs::exists(out / "items.map.csv"));
  CHECK(line_count(out / "summary.csv") == 2);
  fs::remove_all(out);
}

TEST_CASE("replay with bundled embeddings re-runs byte for byte") {
  const fs::path out = scratch("replay");
  const Result r = run("replay --dataset " + kRatings + " --embeddings " + kEmbeddings +
                       " --k 5 --rounds 4 --policy mmr --out " + out.string());
  REQUIRE(r.status == 0);
  const std::string metrics = slurp(out / "metrics.csv");
  CHECK(metrics.rfind("round,metric,beta,value,n_users\n", 0) == 0);
  CHECK(line_count(out / "metrics.csv") == 1 + 4 * 4);
  REQUIRE(run("--config " + (out / "manifest.toml").string()).status == 0);
  CHECK(slurp(out / "metrics.csv") == metrics);
  fs::remove_all(out);
}

TEST_CASE("bad input fails with a message") {
  const fs::path out = scratch("bad");
  CHECK(run("simulate --policy c2ucb --out " + out.string()).status != 0);
  CHECK(run("replay --dataset /nonexistent/file --out " + out.string()).status != 0);
  const Result theory = run("replay --dataset " + kRatings + " --alpha theory --out " + out.string());
  CHECK(theory.status != 0);
  CHECK(theory.output.find("error") != std::string::npos);
  const Result k = run("simulate --k 30 --items 10 --out " + out.string());
  CHECK(k.status != 0);
  fs::remove_all(out);
}
