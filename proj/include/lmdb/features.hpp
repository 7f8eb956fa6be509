#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lmdb {

using ItemId = int;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Cosine similarity z_i·z_j / (‖z_i‖‖z_j‖). Throws UndefinedSimilarity on a
/// zero-norm input and DimensionMismatch on unequal lengths.
double cosine_similarity(const Vector& zi, const Vector& zj);

/// 1 - cosine_similarity; lies in [0, 2].
double cosine_distance(const Vector& zi, const Vector& zj);

enum class MetricMode { raw, slate_normalized };

MetricMode parse_metric_mode(const std::string& text);
std::string to_string(MetricMode mode);

/// Scale applied to a cosine distance under `mode`: 1 for raw,
/// 2 / (K (K - 1)) for slate-normalized with slate capacity K.
double metric_scale(MetricMode mode, int slate_capacity);

/// One pairwise distance h(·,·) over a catalog: either an explicit L×L
/// table or a scaled cosine distance between relevance vectors.
class PairwiseMetric {
 public:
  enum class Kind { table, cosine };

  /// Validates symmetry, non-negativity, and a zero diagonal.
  static PairwiseMetric from_table(Matrix distances);
  static PairwiseMetric cosine(double scale = 1.0);
  static PairwiseMetric cosine(MetricMode mode, int slate_capacity);

  Kind kind() const { return kind_; }
  double scale() const { return scale_; }
  const Matrix& table() const { return table_; }

 private:
  PairwiseMetric(Kind kind, double scale, Matrix table)
      : kind_(kind), scale_(scale), table_(std::move(table)) {}

  Kind kind_;
  double scale_;
  Matrix table_;
};

/// The ground set E = {0, ..., L-1}: relevance vectors z_a (one column per
/// item) and m pairwise distance metrics. Immutable after construction.
///
/// Cosine metrics are tabulated when L <= table_threshold and evaluated on
/// demand otherwise; both paths run the same arithmetic, so the values are
/// identical.
class ItemCatalog {
 public:
  static constexpr std::size_t kDefaultTableThreshold = 4096;

  ItemCatalog(Matrix relevance, std::vector<PairwiseMetric> metrics,
              std::size_t table_threshold = kDefaultTableThreshold);

  int item_count() const { return static_cast<int>(relevance_.cols()); }
  int relevance_dim() const { return static_cast<int>(relevance_.rows()); }
  int diversity_dim() const { return static_cast<int>(metrics_.size()); }
  int joint_dim() const { return relevance_dim() + diversity_dim(); }

  /// z_a. Throws InvalidItem for ids outside [0, L).
  Eigen::Ref<const Vector> relevance(ItemId a) const;
  const Matrix& relevance_matrix() const { return relevance_; }

  /// h_i(a, b).
  double distance(int metric, ItemId a, ItemId b) const;
  bool tabulated(int metric) const { return tables_[metric].has_value(); }
  const PairwiseMetric& metric(int i) const { return metrics_[i]; }

  bool valid(ItemId a) const { return a >= 0 && a < item_count(); }
  void require_valid(ItemId a) const;

 private:
  double cosine_entry(double scale, ItemId a, ItemId b) const;

  Matrix relevance_;
  Vector norms_;
  std::vector<PairwiseMetric> metrics_;
  std::vector<std::optional<Matrix>> tables_;
};

/// An ordered list of distinct items of length at most `capacity`.
class Slate {
 public:
  explicit Slate(int capacity);
  Slate(std::vector<ItemId> items, int capacity);

  void push_back(ItemId a);
  bool contains(ItemId a) const;

  int capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  bool full() const { return static_cast<int>(items_.size()) == capacity_; }
  ItemId operator[](std::size_t k) const { return items_[k]; }
  std::span<const ItemId> items() const { return items_; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  /// First n items, same capacity.
  Slate prefix(std::size_t n) const;

  friend bool operator==(const Slate& a, const Slate& b) { return a.items_ == b.items_; }

 private:
  std::vector<ItemId> items_;
  int capacity_;
};

/// η = [θ; β].
struct PreferenceVector {
  Vector theta;
  Vector beta;

  PreferenceVector() = default;
  PreferenceVector(Vector theta_, Vector beta_) : theta(std::move(theta_)), beta(std::move(beta_)) {}

  int relevance_dim() const { return static_cast<int>(theta.size()); }
  int diversity_dim() const { return static_cast<int>(beta.size()); }
  Vector joined() const;
  static PreferenceVector split(const Vector& eta, int relevance_dim);
};

/// Δ_R(a|A) = z_a. Independent of A, but a must not already be in A.
Vector relevance_marginal(ItemId a, std::span<const ItemId> slate, const ItemCatalog& catalog);

/// Δ_V(a|A): component i is Σ_{j∈A} h_i(a, j), summed in slate order.
Vector diversity_marginal(ItemId a, std::span<const ItemId> slate, const ItemCatalog& catalog);

/// Δ(a|A) = [Δ_R(a|A); Δ_V(a|A)].
Vector joint_marginal(ItemId a, std::span<const ItemId> slate, const ItemCatalog& catalog);

/// F(A|η) = Σ θ_i R_i(A) + Σ β_i V_i(A). Order-independent.
double utility(std::span<const ItemId> slate, const PreferenceVector& eta, const ItemCatalog& catalog);

inline Vector relevance_marginal(ItemId a, const Slate& s, const ItemCatalog& c) {
  return relevance_marginal(a, s.items(), c);
}
inline Vector diversity_marginal(ItemId a, const Slate& s, const ItemCatalog& c) {
  return diversity_marginal(a, s.items(), c);
}
inline Vector joint_marginal(ItemId a, const Slate& s, const ItemCatalog& c) {
  return joint_marginal(a, s.items(), c);
}
inline double utility(const Slate& s, const PreferenceVector& eta, const ItemCatalog& c) {
  return utility(s.items(), eta, c);
}

/// Throws DimensionMismatch unless eta matches the catalog's d and m.
void require_compatible(const PreferenceVector& eta, const ItemCatalog& catalog);

/// Preconditions of the 1/4 approximation guarantee: β ≥ 0 element-wise and
/// θᵀz_a ≥ 0 for every item.
bool approximation_guarantee_holds(const PreferenceVector& eta, const ItemCatalog& catalog);

namespace detail {
// Unchecked fast path used by the search kernels; ids must be valid and distinct.
double utility_unchecked(std::span<const ItemId> slate, const PreferenceVector& eta,
                         const ItemCatalog& catalog);
}  // namespace detail

}  // namespace lmdb
