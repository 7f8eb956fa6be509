#pragma once

#include "lmdb/features.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lmdb {

enum class RatingFormat {
  ml100k_tab,   // user<TAB>item<TAB>rating<TAB>timestamp
  ml1m_colons,  // user::item::rating::timestamp
  generic_csv,  // header row, then user,item,rating[,timestamp]
};

RatingFormat parse_rating_format(const std::string& text);
std::string to_string(RatingFormat format);

struct Interaction {
  int user = 0;  // dense id
  int item = 0;  // dense id
  double rating = 0.0;
  std::optional<std::int64_t> timestamp;
};

struct IngestCounts {
  std::size_t records = 0;          // data lines read (header excluded)
  std::size_t duplicates = 0;       // (user, item) repeats dropped, highest rating kept
  std::size_t below_threshold = 0;  // rating <= threshold
  std::size_t kept = 0;
};

/// Positive interactions with dense ids. user_ids / item_ids map a dense id
/// back to the id in the source file; dense ids follow ascending raw ids.
struct InteractionTable {
  std::vector<Interaction> records;
  std::vector<std::int64_t> user_ids;
  std::vector<std::int64_t> item_ids;
  std::string source;
  std::string format;
  IngestCounts counts;

  int user_count() const { return static_cast<int>(user_ids.size()); }
  int item_count() const { return static_cast<int>(item_ids.size()); }
};

/// Keeps ratings strictly greater than `positive_threshold`.
InteractionTable parse_ratings(const std::filesystem::path& path, RatingFormat format, double positive_threshold);
InteractionTable parse_ratings(std::istream& in, RatingFormat format, double positive_threshold,
                               const std::string& source = "<stream>");

/// Restricts to the `top` most frequent items (ties to the smaller raw id)
/// and re-indexes densely.
InteractionTable keep_top_items(const InteractionTable& table, int top);

struct SplitSpec {
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
};

/// Both halves keep the full table's id maps, so dense ids agree.
struct UserSplit {
  InteractionTable train;
  InteractionTable test;
  std::vector<int> train_users;
  std::vector<int> test_users;
};

/// Seeded shuffle of the dense user ids; the first ⌊fraction·U⌋ go to train.
UserSplit split_users(const InteractionTable& table, const SplitSpec& spec);

/// users.map.csv and items.map.csv with columns dense_id,raw_id.
void write_id_maps(const InteractionTable& table, const std::filesystem::path& directory);

/// Per-dimension min-max map onto [−1, 1]; a constant dimension maps to 0.
struct AffineNormalization {
  Vector low;
  Vector high;

  static AffineNormalization fit(const Matrix& values);
  Matrix apply(const Matrix& values) const;
  Matrix invert(const Matrix& normalized) const;
};

/// Item embeddings, one column per entry of item_ids (raw ids).
struct EmbeddingTable {
  std::vector<std::int64_t> item_ids;
  Matrix values;  // d × items
  std::optional<AffineNormalization> normalization;

  int dim() const { return static_cast<int>(values.rows()); }

  /// Columns re-ordered to match `raw_ids`. Throws InvalidItem on any gap.
  Matrix aligned_to(const std::vector<std::int64_t>& raw_ids) const;
};

/// Reads `item,e0,...,e{d-1}` and normalizes every dimension onto [−1, 1].
EmbeddingTable load_embeddings(const std::filesystem::path& path, int expected_d);
EmbeddingTable load_embeddings(std::istream& in, int expected_d);

/// i.i.d. uniform entries in [low, high), items 0..L-1, not normalized.
EmbeddingTable synthetic_embeddings(int item_count, int dim, double low, double high, std::uint64_t seed);

/// Rank-`dim` truncated SVD of the binary user×item matrix of `table`
/// (subspace iteration, seeded start), item factors V·Σ^{1/2}, normalized onto
/// [−1, 1]. Stand-in for externally trained embeddings.
EmbeddingTable spectral_embeddings(const InteractionTable& table, int dim, std::uint64_t seed);

}  // namespace lmdb
