#include "lmdb/errors.hpp"
#include "lmdb/ingest.hpp"
#include "lmdb/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace lmdb;

namespace {

InteractionTable parse(const std::string& text, RatingFormat format, double threshold = 3.0) {
  std::istringstream in(text);
  return parse_ratings(in, format, threshold, "test");
}

// Ten users with a few positive ratings each.
InteractionTable ten_users() {
  std::ostringstream text;
  text << "user,item,rating\n";
  for (int u = 0; u < 10; ++u) {
    for (int i = 0; i <= u % 3; ++i) text << (100 + u) << ',' << (7 * i + u) << ",5\n";
  }
  return parse(text.str(), RatingFormat::generic_csv);
}

std::string parse_error_message(const std::string& text, RatingFormat format) {
  try {
    parse(text, format);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("parse_ratings") {
  TEST_CASE("threshold is strict") {
    const auto t = parse("1\t10\t2\t0\n1\t11\t3\t0\n1\t12\t4\t0\n", RatingFormat::ml100k_tab);
    CHECK(t.records.size() == 1);
    CHECK(t.records[0].rating == 4.0);
    CHECK(t.item_ids == std::vector<std::int64_t>{12});
    CHECK(t.counts.below_threshold == 2);
  }

  TEST_CASE("all three formats give the same table") {
    const auto a = parse("5\t30\t4\t881250949\n2\t30\t5\t881250950\n5\t10\t1\t1\n2\t20\t4\t7\n",
                         RatingFormat::ml100k_tab);
    const auto b = parse("5::30::4::881250949\n2::30::5::881250950\n5::10::1::1\n2::20::4::7\n",
                         RatingFormat::ml1m_colons);
    const auto c = parse("user,item,rating,timestamp\n5,30,4,881250949\n2,30,5,881250950\n5,10,1,1\n2,20,4,7\n",
                         RatingFormat::generic_csv);
    for (const auto* t : {&a, &b, &c}) {
      CHECK(t->user_count() == 2);
      CHECK(t->item_count() == 2);
      CHECK(t->records.size() == 3);
      CHECK(t->user_ids == std::vector<std::int64_t>{2, 5});
      CHECK(t->item_ids == std::vector<std::int64_t>{20, 30});
    }
    CHECK(a.records[0].timestamp == std::optional<std::int64_t>(7));
  }

  TEST_CASE("ids are dense and follow raw order") {
    const auto t = parse("user,item,rating\n900,5,4\n3,77,5\n900,77,5\n", RatingFormat::generic_csv);
    CHECK(t.user_ids == std::vector<std::int64_t>{3, 900});
    CHECK(t.item_ids == std::vector<std::int64_t>{5, 77});
    for (const auto& r : t.records) {
      CHECK(r.user >= 0);
      CHECK(r.user < 2);
      CHECK(r.item >= 0);
      CHECK(r.item < 2);
    }
  }

  TEST_CASE("duplicates keep the highest rating") {
    const auto t = parse("user,item,rating\n1,1,2\n1,1,5\n1,1,4\n2,1,4\n", RatingFormat::generic_csv);
    CHECK(t.records.size() == 2);
    CHECK(t.counts.duplicates == 2);
    std::set<std::pair<int, int>> pairs;
    for (const auto& r : t.records) {
      CHECK(r.rating >= 4.0);
      pairs.emplace(r.user, r.item);
    }
    CHECK(pairs.size() == t.records.size());
  }

  TEST_CASE("counts add up to the line count") {
    Rng rng(1);
    std::ostringstream text;
    const int lines = 500;
    for (int i = 0; i < lines; ++i) text << rng.below(30) << '\t' << rng.below(40) << '\t' << 1 + rng.below(5) << "\t0\n";
    const auto t = parse(text.str(), RatingFormat::ml100k_tab);
    CHECK(t.counts.records == static_cast<std::size_t>(lines));
    CHECK(t.counts.kept + t.counts.below_threshold + t.counts.duplicates == t.counts.records);
    CHECK(t.counts.kept == t.records.size());
  }

  TEST_CASE("malformed lines report the line number") {
    CHECK(parse_error_message("1\t2\t5\t0\n1\t2\n", RatingFormat::ml100k_tab).find("test:2:") == 0);
    CHECK(parse_error_message("user,item,rating\n1,2,5\n1,x,5\n", RatingFormat::generic_csv).find("test:3:") == 0);
    CHECK(parse_error_message("1::2::five::0\n", RatingFormat::ml1m_colons).find("bad rating") != std::string::npos);
  }

  TEST_CASE("empty results and bad formats") {
    CHECK_THROWS_AS(parse("1\t2\t1\t0\n", RatingFormat::ml100k_tab), EmptyDataset);
    CHECK_THROWS_AS(parse("", RatingFormat::generic_csv), EmptyDataset);
    CHECK_THROWS_AS(parse_ratings("/nonexistent/ratings", RatingFormat::ml100k_tab, 3.0), ParseError);
    CHECK(parse_rating_format("ml100k") == RatingFormat::ml100k_tab);
    CHECK(parse_rating_format("ml1m") == RatingFormat::ml1m_colons);
    CHECK(parse_rating_format("csv") == RatingFormat::generic_csv);
    CHECK_THROWS_AS(parse_rating_format("json"), ConfigError);
  }

  TEST_CASE("top items keep the most frequent") {
    const auto t = parse("user,item,rating\n1,5,5\n2,5,5\n3,5,5\n1,6,5\n2,6,5\n1,7,5\n4,8,5\n", RatingFormat::generic_csv);
    const auto top = keep_top_items(t, 2);
    CHECK(top.item_ids == std::vector<std::int64_t>{5, 6});
    CHECK(top.user_ids == std::vector<std::int64_t>{1, 2, 3});
    CHECK(top.records.size() == 5);
    CHECK(keep_top_items(t, 3).item_ids == std::vector<std::int64_t>{5, 6, 7});
  }
}

TEST_SUITE("split_users") {
  TEST_CASE("ten users split eight and two") {
    const auto t = ten_users();
    REQUIRE(t.user_count() == 10);
    const auto s = split_users(t, SplitSpec{3, 0.8});
    CHECK(s.train_users.size() == 8);
    CHECK(s.test_users.size() == 2);
  }

  TEST_CASE("partition and determinism") {
    const auto t = ten_users();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto s = split_users(t, SplitSpec{seed, 0.8});
      std::set<int> train(s.train_users.begin(), s.train_users.end());
      std::set<int> test(s.test_users.begin(), s.test_users.end());
      for (int u : test) CHECK(train.count(u) == 0);
      CHECK(train.size() + test.size() == 10);
      CHECK(s.train.records.size() + s.test.records.size() == t.records.size());
      for (const auto& r : s.train.records) CHECK(train.count(r.user) == 1);
      for (const auto& r : s.test.records) CHECK(test.count(r.user) == 1);
      CHECK(s.train.user_ids == t.user_ids);
      const auto again = split_users(t, SplitSpec{seed, 0.8});
      CHECK(again.train_users == s.train_users);
    }
    CHECK(split_users(t, SplitSpec{1, 0.8}).test_users != split_users(t, SplitSpec{2, 0.8}).test_users);
  }

  TEST_CASE("preconditions") {
    const auto one = parse("user,item,rating\n1,1,5\n", RatingFormat::generic_csv);
    CHECK_THROWS_AS(split_users(one, SplitSpec{}), PreconditionViolation);
    CHECK_THROWS_AS(split_users(ten_users(), SplitSpec{0, 1.0}), ConfigError);
  }

  TEST_CASE("id maps") {
    const auto dir = std::filesystem::temp_directory_path() / "lmdb_ingest_maps";
    std::filesystem::remove_all(dir);
    write_id_maps(parse("user,item,rating\n9,4,5\n2,8,5\n", RatingFormat::generic_csv), dir);
    std::ifstream users(dir / "users.map.csv");
    std::stringstream text;
    text << users.rdbuf();
    CHECK(text.str() == "dense_id,raw_id\n0,2\n1,9\n");
    CHECK(std::filesystem::exists(dir / "items.map.csv"));
    std::filesystem::remove_all(dir);
  }
}

TEST_SUITE("embeddings") {
  TEST_CASE("min-max endpoints") {
    std::istringstream in("item,e0\n1,0\n2,5\n3,10\n");
    const auto e = load_embeddings(in, 1);
    CHECK(e.values(0, 0) == doctest::Approx(-1.0));
    CHECK(e.values(0, 1) == doctest::Approx(0.0));
    CHECK(e.values(0, 2) == doctest::Approx(1.0));
  }

  TEST_CASE("constant dimension maps to zero") {
    std::istringstream in("item,e0,e1\n1,4,0\n2,4,1\n");
    const auto e = load_embeddings(in, 2);
    CHECK(e.values(0, 0) == 0.0);
    CHECK(e.values(0, 1) == 0.0);
    CHECK(e.values(1, 1) == doctest::Approx(1.0));
  }

  TEST_CASE("round trip, range, and idempotence") {
    const EmbeddingTable raw = synthetic_embeddings(200, 10, -3.0, 7.0, 5);
    const auto map = AffineNormalization::fit(raw.values);
    const Matrix normalized = map.apply(raw.values);
    CHECK(normalized.maxCoeff() <= 1.0);
    CHECK(normalized.minCoeff() >= -1.0);
    CHECK((map.invert(normalized) - raw.values).cwiseAbs().maxCoeff() < 1e-9);
    const Matrix twice = AffineNormalization::fit(normalized).apply(normalized);
    CHECK((twice - normalized).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("file errors") {
    std::istringstream wrong_dim("item,e0,e1\n1,0,0\n");
    CHECK_THROWS_AS(load_embeddings(wrong_dim, 3), DimensionMismatch);
    std::istringstream short_row("item,e0,e1\n1,0,0\n2,1\n");
    CHECK_THROWS_AS(load_embeddings(short_row, 2), DimensionMismatch);
    std::istringstream dup("item,e0\n1,0\n1,2\n");
    CHECK_THROWS_AS(load_embeddings(dup, 1), DuplicateItem);
    std::istringstream header("id,e0\n1,0\n");
    CHECK_THROWS_AS(load_embeddings(header, 1), ParseError);
  }

  TEST_CASE("alignment to raw ids") {
    std::istringstream in("item,e0\n10,0\n30,10\n20,5\n");
    const auto e = load_embeddings(in, 1);
    const Matrix m = e.aligned_to({30, 10});
    CHECK(m(0, 0) == doctest::Approx(1.0));
    CHECK(m(0, 1) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(e.aligned_to({10, 40}), InvalidItem);
  }

  TEST_CASE("synthetic draws") {
    const auto a = synthetic_embeddings(20, 10, 0.0, 0.5, 9);
    CHECK(a.values.minCoeff() >= 0.0);
    CHECK(a.values.maxCoeff() < 0.5);
    CHECK(a.values == synthetic_embeddings(20, 10, 0.0, 0.5, 9).values);
    CHECK_FALSE(a.normalization.has_value());

    const int L = 100000;
    const auto big = synthetic_embeddings(L, 3, 0.0, 0.5, 10);
    const double se = 0.5 / std::sqrt(12.0 * L);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(big.values.row(i).mean() - 0.25) < 3.0 * se);
    CHECK_THROWS_AS(synthetic_embeddings(0, 3, 0.0, 1.0, 0), PreconditionViolation);
    CHECK_THROWS_AS(synthetic_embeddings(3, 3, 1.0, 1.0, 0), PreconditionViolation);
  }

  TEST_CASE("spectral embeddings are bounded and seeded") {
    Rng rng(11);
    std::ostringstream text;
    text << "user,item,rating\n";
    for (int u = 0; u < 60; ++u) {
      for (int i = 0; i < 40; ++i) {
        if (rng.bernoulli((u % 2 == i % 2) ? 0.5 : 0.1)) text << u << ',' << i << ",5\n";
      }
    }
    const auto t = parse(text.str(), RatingFormat::generic_csv);
    const auto e = spectral_embeddings(t, 5, 3);
    CHECK(e.dim() == 5);
    CHECK(e.values.cols() == t.item_count());
    CHECK(e.item_ids == t.item_ids);
    CHECK(e.values.maxCoeff() <= 1.0);
    CHECK(e.values.minCoeff() >= -1.0);
    CHECK(e.values == spectral_embeddings(t, 5, 3).values);
    CHECK_THROWS_AS(spectral_embeddings(t, 0, 3), PreconditionViolation);
  }
}
