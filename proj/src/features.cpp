#include "lmdb/features.hpp"

#include "lmdb/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lmdb {

namespace {

void require_same_length(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    std::ostringstream msg;
    msg << "vector lengths differ: " << a.size() << " vs " << b.size();
    throw DimensionMismatch(msg.str());
  }
}

void require_absent(ItemId a, std::span<const ItemId> slate) {
  if (std::find(slate.begin(), slate.end(), a) != slate.end()) {
    throw DuplicateItem("item " + std::to_string(a) + " is already in the slate");
  }
}

}  // namespace

double cosine_similarity(const Vector& zi, const Vector& zj) {
  require_same_length(zi, zj);
  const double ni = zi.norm();
  const double nj = zj.norm();
  if (ni == 0.0 || nj == 0.0) throw UndefinedSimilarity("cosine similarity of a zero-norm vector");
  return zi.dot(zj) / (ni * nj);
}

double cosine_distance(const Vector& zi, const Vector& zj) {
  // Rounding can push |sim| a hair past 1.
  return std::clamp(1.0 - cosine_similarity(zi, zj), 0.0, 2.0);
}

MetricMode parse_metric_mode(const std::string& text) {
  if (text == "raw") return MetricMode::raw;
  if (text == "slate-normalized") return MetricMode::slate_normalized;
  throw ConfigError("unknown metric mode '" + text + "' (expected raw or slate-normalized)");
}

std::string to_string(MetricMode mode) {
  return mode == MetricMode::raw ? "raw" : "slate-normalized";
}

double metric_scale(MetricMode mode, int slate_capacity) {
  if (mode == MetricMode::raw) return 1.0;
  if (slate_capacity < 2) throw PreconditionViolation("slate-normalized metric needs K >= 2");
  const double k = slate_capacity;
  return 2.0 / (k * (k - 1.0));
}

PairwiseMetric PairwiseMetric::from_table(Matrix distances) {
  if (distances.rows() != distances.cols()) throw DimensionMismatch("distance table must be square");
  for (Eigen::Index i = 0; i < distances.rows(); ++i) {
    if (distances(i, i) != 0.0) throw PreconditionViolation("distance table diagonal must be zero");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (distances(i, j) != distances(j, i)) throw PreconditionViolation("distance table must be symmetric");
      if (distances(i, j) < 0.0) throw PreconditionViolation("distances must be non-negative");
    }
  }
  return PairwiseMetric(Kind::table, 1.0, std::move(distances));
}

PairwiseMetric PairwiseMetric::cosine(double scale) {
  if (!(scale > 0.0)) throw PreconditionViolation("cosine metric scale must be positive");
  return PairwiseMetric(Kind::cosine, scale, Matrix());
}

PairwiseMetric PairwiseMetric::cosine(MetricMode mode, int slate_capacity) {
  return cosine(metric_scale(mode, slate_capacity));
}

ItemCatalog::ItemCatalog(Matrix relevance, std::vector<PairwiseMetric> metrics, std::size_t table_threshold)
    : relevance_(std::move(relevance)), metrics_(std::move(metrics)) {
  if (relevance_.cols() == 0) throw PreconditionViolation("catalog needs at least one item");
  if (relevance_.rows() == 0) throw PreconditionViolation("catalog needs relevance_dim >= 1");
  if (metrics_.empty()) throw PreconditionViolation("catalog needs at least one distance metric");
  const auto L = relevance_.cols();
  norms_ = relevance_.colwise().norm().transpose();

  tables_.resize(metrics_.size());
  for (std::size_t i = 0; i < metrics_.size(); ++i) {
    const auto& metric = metrics_[i];
    if (metric.kind() == PairwiseMetric::Kind::table) {
      if (metric.table().rows() != L) throw DimensionMismatch("distance table size must equal item count");
      tables_[i] = metric.table();
      continue;
    }
    for (Eigen::Index a = 0; a < L; ++a) {
      if (norms_[a] == 0.0) {
        throw UndefinedSimilarity("item " + std::to_string(a) + " has a zero relevance vector");
      }
    }
    if (static_cast<std::size_t>(L) > table_threshold) continue;
    Matrix table = Matrix::Zero(L, L);
    for (Eigen::Index a = 0; a < L; ++a) {
      for (Eigen::Index b = 0; b < a; ++b) {
        table(a, b) = table(b, a) = cosine_entry(metric.scale(), static_cast<ItemId>(a), static_cast<ItemId>(b));
      }
    }
    tables_[i] = std::move(table);
  }
}

double ItemCatalog::cosine_entry(double scale, ItemId a, ItemId b) const {
  if (a == b) return 0.0;
  // Symmetric by construction: always evaluate with the smaller id first.
  const ItemId lo = std::min(a, b);
  const ItemId hi = std::max(a, b);
  const double sim = relevance_.col(lo).dot(relevance_.col(hi)) / (norms_[lo] * norms_[hi]);
  return std::clamp(1.0 - sim, 0.0, 2.0) * scale;
}

Eigen::Ref<const Vector> ItemCatalog::relevance(ItemId a) const {
  require_valid(a);
  return relevance_.col(a);
}

double ItemCatalog::distance(int metric, ItemId a, ItemId b) const {
  const auto& table = tables_[metric];
  if (table) return (*table)(a, b);
  return cosine_entry(metrics_[metric].scale(), a, b);
}

void ItemCatalog::require_valid(ItemId a) const {
  if (!valid(a)) throw InvalidItem("unknown item id " + std::to_string(a));
}

Slate::Slate(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw PreconditionViolation("slate capacity must be positive");
  items_.reserve(static_cast<std::size_t>(capacity));
}

Slate::Slate(std::vector<ItemId> items, int capacity) : Slate(capacity) {
  for (ItemId a : items) push_back(a);
}

void Slate::push_back(ItemId a) {
  if (full()) throw PreconditionViolation("slate is already at capacity " + std::to_string(capacity_));
  if (contains(a)) throw DuplicateItem("item " + std::to_string(a) + " is already in the slate");
  items_.push_back(a);
}

bool Slate::contains(ItemId a) const { return std::find(items_.begin(), items_.end(), a) != items_.end(); }

Slate Slate::prefix(std::size_t n) const {
  Slate out(capacity_);
  for (std::size_t k = 0; k < std::min(n, items_.size()); ++k) out.items_.push_back(items_[k]);
  return out;
}

Vector PreferenceVector::joined() const {
  Vector eta(theta.size() + beta.size());
  eta << theta, beta;
  return eta;
}

PreferenceVector PreferenceVector::split(const Vector& eta, int relevance_dim) {
  if (relevance_dim < 0 || relevance_dim > eta.size()) throw DimensionMismatch("bad relevance_dim for split");
  return PreferenceVector(eta.head(relevance_dim), eta.tail(eta.size() - relevance_dim));
}

Vector relevance_marginal(ItemId a, std::span<const ItemId> slate, const ItemCatalog& catalog) {
  catalog.require_valid(a);
  require_absent(a, slate);
  return catalog.relevance(a);
}

Vector diversity_marginal(ItemId a, std::span<const ItemId> slate, const ItemCatalog& catalog) {
  catalog.require_valid(a);
  require_absent(a, slate);
  Vector gain = Vector::Zero(catalog.diversity_dim());
  for (ItemId j : slate) {
    catalog.require_valid(j);
    for (int i = 0; i < catalog.diversity_dim(); ++i) gain[i] += catalog.distance(i, a, j);
  }
  return gain;
}

Vector joint_marginal(ItemId a, std::span<const ItemId> slate, const ItemCatalog& catalog) {
  Vector joint(catalog.joint_dim());
  joint << relevance_marginal(a, slate, catalog), diversity_marginal(a, slate, catalog);
  return joint;
}

void require_compatible(const PreferenceVector& eta, const ItemCatalog& catalog) {
  if (eta.relevance_dim() != catalog.relevance_dim() || eta.diversity_dim() != catalog.diversity_dim()) {
    std::ostringstream msg;
    msg << "preference dims (" << eta.relevance_dim() << ", " << eta.diversity_dim() << ") do not match catalog ("
        << catalog.relevance_dim() << ", " << catalog.diversity_dim() << ")";
    throw DimensionMismatch(msg.str());
  }
}

double utility(std::span<const ItemId> slate, const PreferenceVector& eta, const ItemCatalog& catalog) {
  require_compatible(eta, catalog);
  for (std::size_t k = 0; k < slate.size(); ++k) {
    catalog.require_valid(slate[k]);
    require_absent(slate[k], slate.first(k));
  }
  return detail::utility_unchecked(slate, eta, catalog);
}

double detail::utility_unchecked(std::span<const ItemId> slate, const PreferenceVector& eta,
                                 const ItemCatalog& catalog) {
  double value = 0.0;
  for (ItemId a : slate) value += eta.theta.dot(catalog.relevance_matrix().col(a));
  for (int i = 0; i < catalog.diversity_dim(); ++i) {
    double dispersion = 0.0;
    for (std::size_t p = 0; p < slate.size(); ++p) {
      for (std::size_t q = p + 1; q < slate.size(); ++q) dispersion += catalog.distance(i, slate[p], slate[q]);
    }
    value += eta.beta[i] * dispersion;
  }
  return value;
}

bool approximation_guarantee_holds(const PreferenceVector& eta, const ItemCatalog& catalog) {
  require_compatible(eta, catalog);
  if ((eta.beta.array() < 0.0).any()) return false;
  const Vector scores = catalog.relevance_matrix().transpose() * eta.theta;
  return (scores.array() >= 0.0).all();
}

}  // namespace lmdb
