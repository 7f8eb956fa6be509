#pragma once

#include "lmdb/features.hpp"
#include "lmdb/kernels.hpp"
#include "lmdb/policy.hpp"

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace lmdb {

struct LmdhConfig {
  double lambda = 50.0;
  double alpha = 1.0;
  int relevance_dim = 10;
  int diversity_dim = 1;
  int slate_size = 10;

  void validate() const;
};

/// Sufficient statistics of the hybrid ridge model.
///
/// With Φ = λI + Σ ζζᵀ over every observed ζ = [z; x], the blocks are
///   M = λI_m + Σ xxᵀ,  B = Σ zxᵀ,  y = Σ w x,
///   H = λI_d + Σ zzᵀ − B M⁻¹ Bᵀ,  u = Σ w z − B M⁻¹ y,
/// i.e. H is the Schur complement of M in Φ. H⁻¹ and M⁻¹ are refreshed by
/// Cholesky after every update.
class HybridStatistics {
 public:
  HybridStatistics(int relevance_dim, int diversity_dim, double lambda);

  int relevance_dim() const { return static_cast<int>(h_.rows()); }
  int diversity_dim() const { return static_cast<int>(m_.rows()); }
  double lambda() const { return lambda_; }

  const Matrix& h() const { return h_; }
  const Matrix& b() const { return b_; }
  const Matrix& m() const { return m_; }
  const Vector& u() const { return u_; }
  const Vector& y() const { return y_; }
  const Matrix& h_inv() const { return h_inv_; }
  const Matrix& m_inv() const { return m_inv_; }

  /// Folds one round of feedback in with the two-phase hybrid update.
  /// `features[k]` is the joint [z; x] logged for position k at selection
  /// time; `rewards[k]` must lie in [0, 1].
  void update(std::span<const Vector> features, std::span<const double> rewards);

  /// Snapshot of everything the UCB score needs, for a fixed α.
  UcbModel ucb_model(double alpha) const;

  /// Φ rebuilt from the blocks: [[H + B M⁻¹ Bᵀ, B], [Bᵀ, M]].
  Matrix joint_gram() const;

  /// Text snapshot: a `d,m,lambda` header row and its values, then
  /// `block,row,col,value` rows for H, B, M, u, y in row-major order.
  void write_csv(std::ostream& out) const;
  static HybridStatistics read_csv(std::istream& in);

 private:
  void refresh_inverses();

  double lambda_;
  Matrix h_, b_, m_;
  Vector u_, y_;
  Matrix h_inv_, m_inv_;
};

/// θ̂ = H⁻¹u, β̂ = M⁻¹(y − Bᵀθ̂).
PreferenceVector estimate_preferences(const HybridStatistics& stats);

/// v = zᵀH⁻¹z − 2zᵀH⁻¹BM⁻¹x + xᵀM⁻¹x + xᵀM⁻¹BᵀH⁻¹BM⁻¹x, which equals
/// ζᵀΦ⁻¹ζ. Clamped at 0.
double confidence_width(const Vector& z, const Vector& x, const HybridStatistics& stats);

/// Counts numerically negative widths that were clamped to zero.
struct WidthDiagnostics {
  std::size_t negative_width_clamps = 0;
};

/// μ = θ̂ᵀz + β̂ᵀx + α√v.
double ucb_score(const Vector& z, const Vector& x, const HybridStatistics& stats, const Vector& theta_hat,
                 const Vector& beta_hat, double alpha, WidthDiagnostics* diagnostics = nullptr);

struct SlateSelection {
  Slate slate;
  std::vector<Vector> features;  // [z; x] per position
  std::vector<double> widths;    // √v per position
  std::size_t negative_width_clamps = 0;
};

/// Greedy UCB slate: at each position recompute Δ(a|A_t) against the partial
/// slate and append the highest-μ candidate, smallest id on ties.
SlateSelection select_slate(const HybridStatistics& stats, const LmdhConfig& config, const ItemCatalog& catalog,
                            std::span<const ItemId> candidates, Execution exec = Execution::parallel);

/// Functional form of HybridStatistics::update.
HybridStatistics update(HybridStatistics stats, const Slate& slate, std::span<const double> rewards,
                        std::span<const Vector> features);

struct TheoryParams {
  long horizon = 1000;  // n
  int slate_size = 5;   // K
  int relevance_dim = 10;
  int diversity_dim = 1;
  double lambda = 1.0;
  double delta = 1.0 / 5000.0;
  double eta_norm_bound = 1.0;  // S ≥ ‖η*‖₂
  double gamma = 0.25;

  void validate() const;
};

/// Smallest α of the confidence-set lemma:
/// √((d+m)·log(1 + nK/((d+m)λ)) + 2·log(1/δ)) + √λ·S.
double theoretical_alpha(const TheoryParams& params);

/// K·√( n(d+m)·log(1 + nK/((d+m)λ)) / (λ·log(1 + 1/λ)) ).
double lemma1_width_budget(const TheoryParams& params);

/// (2αK/γ)·√( n(d+m)·log(1 + nK/((d+m)λ)) / (λ·log(1 + 1/λ)) ) + nKδ.
/// Throws PreconditionViolation when α < theoretical_alpha(params).
double regret_upper_bound(const TheoryParams& params, double alpha);

/// The learning policy built on the functions above.
class LmdhPolicy final : public Policy {
 public:
  LmdhPolicy(std::shared_ptr<const ItemCatalog> catalog, LmdhConfig config, Execution exec = Execution::parallel);

  std::string name() const override { return "lmdh"; }
  Recommendation select(std::span<const ItemId> candidates, int round) override;
  void observe(const Recommendation& recommendation, std::span<const double> rewards) override;

  const HybridStatistics& statistics() const { return stats_; }
  HybridStatistics& statistics() { return stats_; }
  std::size_t negative_width_clamps() const { return clamps_; }

 private:
  std::shared_ptr<const ItemCatalog> catalog_;
  LmdhConfig config_;
  Execution exec_;
  HybridStatistics stats_;
  std::size_t clamps_ = 0;
};

}  // namespace lmdb
