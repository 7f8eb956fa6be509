#pragma once

// Data-parallel inner loops. Every kernel has a serial reference and an
// OpenMP version that must produce bit-identical results; the test suite
// checks the pair against each other and bench/ compares their speed.

#include "lmdb/features.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace lmdb {

enum class Execution { serial, parallel };

/// Frozen snapshot of the quantities the UCB score needs, taken once per
/// round so the per-item work is a handful of small matrix-vector products.
struct UcbModel {
  Vector theta_hat;       // d
  Vector beta_hat;        // m
  Matrix h_inv;           // H⁻¹, d×d
  Matrix m_inv;           // M⁻¹, m×m
  Matrix cross;           // H⁻¹ B M⁻¹, d×m
  Matrix diversity_quad;  // M⁻¹ Bᵀ H⁻¹ B M⁻¹, m×m
  double alpha = 0.0;

  /// zᵀH⁻¹z − 2zᵀH⁻¹BM⁻¹x + xᵀM⁻¹x + xᵀM⁻¹BᵀH⁻¹BM⁻¹x, unclamped.
  double width_sq(const Eigen::Ref<const Vector>& z, const Eigen::Ref<const Vector>& x) const {
    return z.dot(h_inv * z) - 2.0 * z.dot(cross * x) + x.dot(m_inv * x) + x.dot(diversity_quad * x);
  }
};

/// Columns of `relevance` (d×n) and `diversity` (m×n) are candidate
/// features. Writes the raw quadratic form to width_sq[j] and the score
/// θ̂ᵀz + β̂ᵀx + α√max(v, 0) to score[j].
void ucb_scores_serial(const UcbModel& model, const Matrix& relevance, const Matrix& diversity,
                       std::span<double> score, std::span<double> width_sq);
void ucb_scores_omp(const UcbModel& model, const Matrix& relevance, const Matrix& diversity,
                    std::span<double> score, std::span<double> width_sq);

inline void ucb_scores(Execution exec, const UcbModel& model, const Matrix& relevance, const Matrix& diversity,
                       std::span<double> score, std::span<double> width_sq) {
  if (exec == Execution::parallel) {
    ucb_scores_omp(model, relevance, diversity, score, width_sq);
  } else {
    ucb_scores_serial(model, relevance, diversity, score, width_sq);
  }
}

/// C(n, k), saturating at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

struct SubsetOptimum {
  std::vector<ItemId> items;  // ascending candidate order
  double value = 0.0;         // F(items|η) computed by utility()
  std::uint64_t subsets_scanned = 0;
};

/// Scans every K-subset of `candidates` for the maximum of F(·|η). Ties go to
/// the lexicographically first subset in candidate order.
SubsetOptimum best_subset_serial(const PreferenceVector& eta, const ItemCatalog& catalog,
                                 std::span<const ItemId> candidates, int K);
SubsetOptimum best_subset_omp(const PreferenceVector& eta, const ItemCatalog& catalog,
                              std::span<const ItemId> candidates, int K);

/// Number of OpenMP threads available to the parallel kernels.
int parallel_workers();
void set_parallel_workers(int workers);

}  // namespace lmdb
