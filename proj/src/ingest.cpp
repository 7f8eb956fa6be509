#include "lmdb/ingest.hpp"

#include "lmdb/errors.hpp"
#include "lmdb/rng.hpp"

#include <Eigen/QR>
#include <Eigen/Sparse>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string_view>

namespace lmdb {

namespace {

struct RawRecord {
  std::int64_t user;
  std::int64_t item;
  double rating;
  std::optional<std::int64_t> timestamp;
};

std::vector<std::string_view> split_fields(std::string_view line, std::string_view separator) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(separator, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + separator.size();
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  const auto result = std::from_chars(text.data(), end, out);
  return result.ec == std::errc() && result.ptr == end;
}

[[noreturn]] void malformed(const std::string& source, std::size_t line_no, const std::string& line,
                            const std::string& why) {
  throw ParseError(source + ":" + std::to_string(line_no) + ": " + why + " in '" + line + "'");
}

void dense_index(std::vector<std::int64_t>& raw_ids) {
  std::sort(raw_ids.begin(), raw_ids.end());
  raw_ids.erase(std::unique(raw_ids.begin(), raw_ids.end()), raw_ids.end());
}

int lookup(const std::vector<std::int64_t>& sorted_ids, std::int64_t raw) {
  return static_cast<int>(std::lower_bound(sorted_ids.begin(), sorted_ids.end(), raw) - sorted_ids.begin());
}

InteractionTable subset_table(const InteractionTable& base, const std::vector<Interaction>& records) {
  InteractionTable out;
  out.user_ids = base.user_ids;
  out.item_ids = base.item_ids;
  out.source = base.source;
  out.format = base.format;
  out.records = records;
  out.counts.records = records.size();
  out.counts.kept = records.size();
  return out;
}

}  // namespace

RatingFormat parse_rating_format(const std::string& text) {
  if (text == "ml100k" || text == "ml100k-tab") return RatingFormat::ml100k_tab;
  if (text == "ml1m" || text == "ml1m-colons") return RatingFormat::ml1m_colons;
  if (text == "csv" || text == "generic-csv") return RatingFormat::generic_csv;
  throw ConfigError("unknown rating format '" + text + "' (expected ml100k, ml1m or csv)");
}

std::string to_string(RatingFormat format) {
  switch (format) {
    case RatingFormat::ml100k_tab: return "ml100k-tab";
    case RatingFormat::ml1m_colons: return "ml1m-colons";
    case RatingFormat::generic_csv: return "generic-csv";
  }
  return "unknown";
}

InteractionTable parse_ratings(const std::filesystem::path& path, RatingFormat format, double positive_threshold) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open ratings file " + path.string());
  return parse_ratings(in, format, positive_threshold, path.string());
}

InteractionTable parse_ratings(std::istream& in, RatingFormat format, double positive_threshold,
                               const std::string& source) {
  const std::string_view separator = format == RatingFormat::ml100k_tab    ? "\t"
                                     : format == RatingFormat::ml1m_colons ? "::"
                                                                           : ",";
  std::vector<RawRecord> raw;
  std::string line;
  std::size_t line_no = 0;
  if (format == RatingFormat::generic_csv) {
    if (!std::getline(in, line)) throw EmptyDataset(source + ": missing header row");
    ++line_no;
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, separator);
    if (fields.size() < 3 || fields.size() > 4) malformed(source, line_no, line, "expected 3 or 4 fields");
    RawRecord rec{};
    if (!parse_number(fields[0], rec.user)) malformed(source, line_no, line, "bad user id");
    if (!parse_number(fields[1], rec.item)) malformed(source, line_no, line, "bad item id");
    if (!parse_number(fields[2], rec.rating)) malformed(source, line_no, line, "bad rating");
    if (fields.size() == 4) {
      std::int64_t ts = 0;
      if (!parse_number(fields[3], ts)) malformed(source, line_no, line, "bad timestamp");
      rec.timestamp = ts;
    }
    raw.push_back(rec);
  }

  InteractionTable table;
  table.source = source;
  table.format = to_string(format);
  table.counts.records = raw.size();

  // Highest rating first within each (user, item), then drop the repeats.
  std::stable_sort(raw.begin(), raw.end(), [](const RawRecord& a, const RawRecord& b) {
    if (a.user != b.user) return a.user < b.user;
    if (a.item != b.item) return a.item < b.item;
    return a.rating > b.rating;
  });
  std::vector<RawRecord> kept;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (i > 0 && raw[i].user == raw[i - 1].user && raw[i].item == raw[i - 1].item) {
      ++table.counts.duplicates;
      continue;
    }
    if (raw[i].rating > positive_threshold) {
      kept.push_back(raw[i]);
    } else {
      ++table.counts.below_threshold;
    }
  }
  table.counts.kept = kept.size();
  if (kept.empty()) throw EmptyDataset(source + ": no ratings above threshold " + std::to_string(positive_threshold));

  for (const auto& r : kept) {
    table.user_ids.push_back(r.user);
    table.item_ids.push_back(r.item);
  }
  dense_index(table.user_ids);
  dense_index(table.item_ids);
  table.records.reserve(kept.size());
  for (const auto& r : kept) {
    table.records.push_back({lookup(table.user_ids, r.user), lookup(table.item_ids, r.item), r.rating, r.timestamp});
  }
  return table;
}

InteractionTable keep_top_items(const InteractionTable& table, int top) {
  if (top < 1) throw ConfigError("--top-items must be >= 1");
  std::vector<std::size_t> popularity(static_cast<std::size_t>(table.item_count()), 0);
  for (const auto& r : table.records) ++popularity[r.item];
  std::vector<int> order(popularity.size());
  std::iota(order.begin(), order.end(), 0);
  // Dense ids follow raw ids, so the smaller dense id is the smaller raw id.
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return popularity[a] > popularity[b]; });
  order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(top)));
  std::vector<bool> keep(popularity.size(), false);
  for (int item : order) keep[item] = true;

  InteractionTable out;
  out.source = table.source;
  out.format = table.format;
  for (const auto& r : table.records) {
    if (!keep[r.item]) continue;
    out.user_ids.push_back(table.user_ids[r.user]);
    out.item_ids.push_back(table.item_ids[r.item]);
  }
  dense_index(out.user_ids);
  dense_index(out.item_ids);
  for (const auto& r : table.records) {
    if (!keep[r.item]) continue;
    out.records.push_back({lookup(out.user_ids, table.user_ids[r.user]), lookup(out.item_ids, table.item_ids[r.item]),
                           r.rating, r.timestamp});
  }
  out.counts = table.counts;
  out.counts.kept = out.records.size();
  return out;
}

UserSplit split_users(const InteractionTable& table, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) throw ConfigError("train fraction must lie in (0, 1)");
  if (table.user_count() < 2) throw PreconditionViolation("splitting needs at least 2 users");
  std::vector<int> users(static_cast<std::size_t>(table.user_count()));
  std::iota(users.begin(), users.end(), 0);
  Rng rng(spec.seed);
  rng.shuffle(users);
  const auto train_count = static_cast<std::size_t>(spec.train_fraction * static_cast<double>(users.size()));

  UserSplit split;
  split.train_users.assign(users.begin(), users.begin() + static_cast<std::ptrdiff_t>(train_count));
  split.test_users.assign(users.begin() + static_cast<std::ptrdiff_t>(train_count), users.end());
  std::sort(split.train_users.begin(), split.train_users.end());
  std::sort(split.test_users.begin(), split.test_users.end());

  std::vector<bool> in_train(users.size(), false);
  for (int u : split.train_users) in_train[u] = true;
  std::vector<Interaction> train, test;
  for (const auto& r : table.records) (in_train[r.user] ? train : test).push_back(r);
  split.train = subset_table(table, train);
  split.test = subset_table(table, test);
  return split;
}

void write_id_maps(const InteractionTable& table, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  const auto dump = [](const std::filesystem::path& path, const std::vector<std::int64_t>& ids) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << "dense_id,raw_id\n";
    for (std::size_t i = 0; i < ids.size(); ++i) out << i << ',' << ids[i] << '\n';
  };
  dump(directory / "users.map.csv", table.user_ids);
  dump(directory / "items.map.csv", table.item_ids);
}

AffineNormalization AffineNormalization::fit(const Matrix& values) {
  if (values.cols() == 0) throw EmptyDataset("cannot normalize an empty embedding table");
  return AffineNormalization{values.rowwise().minCoeff(), values.rowwise().maxCoeff()};
}

Matrix AffineNormalization::apply(const Matrix& values) const {
  Matrix out(values.rows(), values.cols());
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    const double span = high[i] - low[i];
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      out(i, j) = span > 0.0 ? 2.0 * (values(i, j) - low[i]) / span - 1.0 : 0.0;
    }
  }
  return out;
}

Matrix AffineNormalization::invert(const Matrix& normalized) const {
  Matrix out(normalized.rows(), normalized.cols());
  for (Eigen::Index i = 0; i < normalized.rows(); ++i) {
    const double span = high[i] - low[i];
    for (Eigen::Index j = 0; j < normalized.cols(); ++j) out(i, j) = low[i] + (normalized(i, j) + 1.0) * span / 2.0;
  }
  return out;
}

Matrix EmbeddingTable::aligned_to(const std::vector<std::int64_t>& raw_ids) const {
  std::map<std::int64_t, Eigen::Index> column;
  for (std::size_t j = 0; j < item_ids.size(); ++j) column.emplace(item_ids[j], static_cast<Eigen::Index>(j));
  Matrix out(values.rows(), static_cast<Eigen::Index>(raw_ids.size()));
  for (std::size_t j = 0; j < raw_ids.size(); ++j) {
    const auto it = column.find(raw_ids[j]);
    if (it == column.end()) throw InvalidItem("no embedding for item " + std::to_string(raw_ids[j]));
    out.col(static_cast<Eigen::Index>(j)) = values.col(it->second);
  }
  return out;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, int expected_d) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open embeddings file " + path.string());
  return load_embeddings(in, expected_d);
}

EmbeddingTable load_embeddings(std::istream& in, int expected_d) {
  std::string line;
  if (!std::getline(in, line)) throw EmptyDataset("embeddings: empty file");
  const auto header = split_fields(trim(line), ",");
  if (static_cast<int>(header.size()) != expected_d + 1) {
    throw DimensionMismatch("embeddings header has " + std::to_string(header.size() - 1) + " dimensions, expected " +
                            std::to_string(expected_d));
  }
  if (trim(header[0]) != "item") throw ParseError("embeddings header must start with 'item'");
  for (int k = 0; k < expected_d; ++k) {
    if (trim(header[k + 1]) != "e" + std::to_string(k)) throw ParseError("embeddings header column " + std::to_string(k + 1) + " must be e" + std::to_string(k));
  }

  EmbeddingTable table;
  std::vector<std::vector<double>> rows;
  std::map<std::int64_t, std::size_t> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, ",");
    if (static_cast<int>(fields.size()) != expected_d + 1) {
      throw DimensionMismatch("embeddings line " + std::to_string(line_no) + " has " + std::to_string(fields.size() - 1) +
                              " values, expected " + std::to_string(expected_d));
    }
    std::int64_t id = 0;
    if (!parse_number(fields[0], id)) malformed("embeddings", line_no, line, "bad item id");
    if (!seen.emplace(id, line_no).second) throw DuplicateItem("embeddings: item " + std::to_string(id) + " appears twice");
    std::vector<double> row(static_cast<std::size_t>(expected_d));
    for (int k = 0; k < expected_d; ++k) {
      if (!parse_number(fields[k + 1], row[k])) malformed("embeddings", line_no, line, "bad value");
    }
    table.item_ids.push_back(id);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw EmptyDataset("embeddings: no rows");
  Matrix raw(expected_d, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    for (int k = 0; k < expected_d; ++k) raw(k, static_cast<Eigen::Index>(j)) = rows[j][k];
  }
  table.normalization = AffineNormalization::fit(raw);
  table.values = table.normalization->apply(raw);
  return table;
}

EmbeddingTable synthetic_embeddings(int item_count, int dim, double low, double high, std::uint64_t seed) {
  if (item_count < 1 || dim < 1) throw PreconditionViolation("L and d must be >= 1");
  if (!(low < high)) throw PreconditionViolation("range low must be < high");
  Rng rng(seed);
  EmbeddingTable table;
  table.values.resize(dim, item_count);
  for (int j = 0; j < item_count; ++j) {
    table.item_ids.push_back(j);
    for (int k = 0; k < dim; ++k) table.values(k, j) = rng.uniform(low, high);
  }
  return table;
}

EmbeddingTable spectral_embeddings(const InteractionTable& table, int dim, std::uint64_t seed) {
  if (dim < 1 || dim > table.item_count()) throw PreconditionViolation("embedding dim must lie in [1, item count]");
  using Sparse = Eigen::SparseMatrix<double>;
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(table.records.size());
  for (const auto& r : table.records) entries.emplace_back(r.user, r.item, 1.0);
  Sparse x(table.user_count(), table.item_count());
  x.setFromTriplets(entries.begin(), entries.end(), [](double a, double) { return a; });

  Rng rng(seed);
  Matrix basis(table.item_count(), dim);
  for (Eigen::Index i = 0; i < basis.rows(); ++i) {
    for (Eigen::Index k = 0; k < dim; ++k) basis(i, k) = rng.uniform(-1.0, 1.0);
  }
  const auto orthonormalize = [](const Matrix& a) -> Matrix {
    Eigen::HouseholderQR<Matrix> qr(a);
    return qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
  };
  basis = orthonormalize(basis);
  for (int iter = 0; iter < 60; ++iter) {
    const Matrix users = x * basis;
    basis = orthonormalize(Matrix(x.transpose() * users));
  }

  // Rayleigh-Ritz on the converged subspace.
  const Matrix projected = basis.transpose() * (x.transpose() * (x * basis));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (projected + projected.transpose()));
  Matrix vectors = basis * eig.eigenvectors().rowwise().reverse();
  Vector eigenvalues = eig.eigenvalues().reverse();
  Matrix factors(table.item_count(), dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    Eigen::Index arg = 0;
    vectors.col(k).cwiseAbs().maxCoeff(&arg);
    const double sign = vectors(arg, k) < 0.0 ? -1.0 : 1.0;
    factors.col(k) = sign * std::sqrt(std::sqrt(std::max(eigenvalues[k], 0.0))) * vectors.col(k);
  }

  EmbeddingTable out;
  out.item_ids = table.item_ids;
  const Matrix raw = factors.transpose();
  out.normalization = AffineNormalization::fit(raw);
  out.values = out.normalization->apply(raw);
  return out;
}

}  // namespace lmdb
