#include "lmdb/lmdh.hpp"

#include "lmdb/errors.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace lmdb {

namespace {

Matrix spd_inverse(const Matrix& a, const char* name) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw NumericalDegeneracy(std::string(name) + " is not positive definite");
  Matrix inv = llt.solve(Matrix::Identity(a.rows(), a.cols()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace

void LmdhConfig::validate() const {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (relevance_dim < 1 || diversity_dim < 1 || slate_size < 1) throw ConfigError("d, m, K must be positive");
}

HybridStatistics::HybridStatistics(int relevance_dim, int diversity_dim, double lambda) : lambda_(lambda) {
  if (!(lambda > 0.0)) throw PreconditionViolation("lambda must be > 0");
  if (relevance_dim < 1 || diversity_dim < 1) throw DimensionMismatch("d and m must be positive");
  h_ = lambda * Matrix::Identity(relevance_dim, relevance_dim);
  m_ = lambda * Matrix::Identity(diversity_dim, diversity_dim);
  b_ = Matrix::Zero(relevance_dim, diversity_dim);
  u_ = Vector::Zero(relevance_dim);
  y_ = Vector::Zero(diversity_dim);
  refresh_inverses();
}

void HybridStatistics::refresh_inverses() {
  h_inv_ = spd_inverse(h_, "H");
  m_inv_ = spd_inverse(m_, "M");
}

void HybridStatistics::update(std::span<const Vector> features, std::span<const double> rewards) {
  if (features.size() != rewards.size()) {
    throw DimensionMismatch("got " + std::to_string(features.size()) + " feature vectors for " +
                            std::to_string(rewards.size()) + " rewards");
  }
  const int d = relevance_dim();
  const int m = diversity_dim();
  for (std::size_t k = 0; k < features.size(); ++k) {
    if (features[k].size() != d + m) throw DimensionMismatch("feature vector length must be d + m");
    if (!(rewards[k] >= 0.0 && rewards[k] <= 1.0)) {
      throw InvalidFeedback("reward " + std::to_string(rewards[k]) + " at position " + std::to_string(k) +
                            " is outside [0, 1]");
    }
  }
  if (features.empty()) return;

  // Undo the Schur correction so H and u hold the plain sums again.
  h_ += b_ * m_inv_ * b_.transpose();
  u_ += b_ * (m_inv_ * y_);

  Matrix zz = Matrix::Zero(d, d);
  Vector wz = Vector::Zero(d);
  for (std::size_t k = 0; k < features.size(); ++k) {
    const auto z = features[k].head(d);
    const auto x = features[k].tail(m);
    m_ += x * x.transpose();
    b_ += z * x.transpose();
    y_ += rewards[k] * x;
    zz += z * z.transpose();
    wz += rewards[k] * z;
  }
  m_inv_ = spd_inverse(m_, "M");

  h_ += zz - b_ * m_inv_ * b_.transpose();
  h_ = 0.5 * (h_ + h_.transpose());
  u_ += wz - b_ * (m_inv_ * y_);
  h_inv_ = spd_inverse(h_, "H");
}

UcbModel HybridStatistics::ucb_model(double alpha) const {
  UcbModel model;
  const PreferenceVector estimate = estimate_preferences(*this);
  model.theta_hat = estimate.theta;
  model.beta_hat = estimate.beta;
  model.h_inv = h_inv_;
  model.m_inv = m_inv_;
  const Matrix bm = b_ * m_inv_;
  model.cross = h_inv_ * bm;
  model.diversity_quad = bm.transpose() * h_inv_ * bm;
  model.alpha = alpha;
  return model;
}

Matrix HybridStatistics::joint_gram() const {
  const int d = relevance_dim();
  const int m = diversity_dim();
  Matrix phi(d + m, d + m);
  phi.topLeftCorner(d, d) = h_ + b_ * m_inv_ * b_.transpose();
  phi.topRightCorner(d, m) = b_;
  phi.bottomLeftCorner(m, d) = b_.transpose();
  phi.bottomRightCorner(m, m) = m_;
  return phi;
}

void HybridStatistics::write_csv(std::ostream& out) const {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "d,m,lambda\n" << relevance_dim() << ',' << diversity_dim() << ',' << lambda_ << '\n';
  out << "block,row,col,value\n";
  const auto dump = [&out](const char* name, const Matrix& a) {
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      for (Eigen::Index c = 0; c < a.cols(); ++c) out << name << ',' << r << ',' << c << ',' << a(r, c) << '\n';
    }
  };
  dump("H", h_);
  dump("B", b_);
  dump("M", m_);
  dump("u", u_);
  dump("y", y_);
}

HybridStatistics HybridStatistics::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "d,m,lambda") throw ParseError("statistics snapshot: missing d,m,lambda header");
  if (!std::getline(in, line)) throw ParseError("statistics snapshot: missing header values");
  int d = 0, m = 0;
  double lambda = 0.0;
  char c1 = 0, c2 = 0;
  std::istringstream header(line);
  if (!(header >> d >> c1 >> m >> c2 >> lambda) || c1 != ',' || c2 != ',') {
    throw ParseError("statistics snapshot: bad header values '" + line + "'");
  }
  HybridStatistics stats(d, m, lambda);
  if (!std::getline(in, line) || line != "block,row,col,value") throw ParseError("statistics snapshot: missing column header");

  int line_no = 3;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string block, field;
    std::getline(row, block, ',');
    long r = -1, c = -1;
    double value = 0.0;
    try {
      std::getline(row, field, ',');
      r = std::stol(field);
      std::getline(row, field, ',');
      c = std::stol(field);
      std::getline(row, field);
      value = std::stod(field);
    } catch (const std::exception&) {
      throw ParseError("statistics snapshot line " + std::to_string(line_no) + ": malformed '" + line + "'");
    }
    Eigen::MatrixXd* target = nullptr;
    Eigen::VectorXd* vec = nullptr;
    if (block == "H") target = &stats.h_;
    else if (block == "B") target = &stats.b_;
    else if (block == "M") target = &stats.m_;
    else if (block == "u") vec = &stats.u_;
    else if (block == "y") vec = &stats.y_;
    else throw ParseError("statistics snapshot line " + std::to_string(line_no) + ": unknown block '" + block + "'");
    if (target) {
      if (r < 0 || c < 0 || r >= target->rows() || c >= target->cols()) throw ParseError("index out of range at line " + std::to_string(line_no));
      (*target)(r, c) = value;
    } else {
      if (r < 0 || c != 0 || r >= vec->size()) throw ParseError("index out of range at line " + std::to_string(line_no));
      (*vec)[r] = value;
    }
  }
  stats.refresh_inverses();
  return stats;
}

PreferenceVector estimate_preferences(const HybridStatistics& stats) {
  Vector theta = stats.h_inv() * stats.u();
  Vector beta = stats.m_inv() * (stats.y() - stats.b().transpose() * theta);
  if (!theta.allFinite() || !beta.allFinite()) throw NumericalDegeneracy("non-finite preference estimate");
  return PreferenceVector(std::move(theta), std::move(beta));
}

double confidence_width(const Vector& z, const Vector& x, const HybridStatistics& stats) {
  if (z.size() != stats.relevance_dim() || x.size() != stats.diversity_dim()) {
    throw DimensionMismatch("feature dims do not match statistics");
  }
  const Matrix bm = stats.b() * stats.m_inv();
  const double v = z.dot(stats.h_inv() * z) - 2.0 * z.dot(stats.h_inv() * (bm * x)) + x.dot(stats.m_inv() * x) +
                   (bm * x).dot(stats.h_inv() * (bm * x));
  return std::max(v, 0.0);
}

double ucb_score(const Vector& z, const Vector& x, const HybridStatistics& stats, const Vector& theta_hat,
                 const Vector& beta_hat, double alpha, WidthDiagnostics* diagnostics) {
  if (z.size() != theta_hat.size() || x.size() != beta_hat.size()) throw DimensionMismatch("estimate dims do not match features");
  const double v = stats.ucb_model(alpha).width_sq(z, x);
  if (v < 0.0 && diagnostics) ++diagnostics->negative_width_clamps;
  return theta_hat.dot(z) + beta_hat.dot(x) + alpha * std::sqrt(std::max(v, 0.0));
}

SlateSelection select_slate(const HybridStatistics& stats, const LmdhConfig& config, const ItemCatalog& catalog,
                            std::span<const ItemId> candidates, Execution exec) {
  config.validate();
  const int K = config.slate_size;
  if (static_cast<std::size_t>(K) > candidates.size()) {
    throw InsufficientCandidates("need " + std::to_string(K) + " candidates, have " +
                                 std::to_string(candidates.size()));
  }
  if (catalog.relevance_dim() != stats.relevance_dim() || catalog.diversity_dim() != stats.diversity_dim()) {
    throw DimensionMismatch("catalog dims do not match statistics");
  }
  const int d = catalog.relevance_dim();
  const int m = catalog.diversity_dim();
  const auto n = static_cast<Eigen::Index>(candidates.size());

  const UcbModel model = stats.ucb_model(config.alpha);
  Matrix relevance(d, n);
  for (Eigen::Index j = 0; j < n; ++j) relevance.col(j) = catalog.relevance(candidates[j]);
  Matrix diversity = Matrix::Zero(m, n);
  std::vector<double> score(n), width_sq(n);
  std::vector<bool> taken(n, false);

  SlateSelection out{Slate(K), {}, {}, 0};
  for (int step = 0; step < K; ++step) {
    ucb_scores(exec, model, relevance, diversity, score, width_sq);
    Eigen::Index best = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (taken[j]) continue;
      if (best < 0 || score[j] > score[best] || (score[j] == score[best] && candidates[j] < candidates[best])) best = j;
    }
    const ItemId chosen = candidates[best];
    out.slate.push_back(chosen);  // throws on duplicate candidates
    taken[best] = true;
    Vector zeta(d + m);
    zeta << relevance.col(best), diversity.col(best);
    out.features.push_back(std::move(zeta));
    if (width_sq[best] < 0.0) ++out.negative_width_clamps;
    out.widths.push_back(std::sqrt(std::max(width_sq[best], 0.0)));
    for (Eigen::Index j = 0; j < n; ++j) {
      if (taken[j]) continue;
      for (int i = 0; i < m; ++i) diversity(i, j) += catalog.distance(i, candidates[j], chosen);
    }
  }
  return out;
}

HybridStatistics update(HybridStatistics stats, const Slate& slate, std::span<const double> rewards,
                        std::span<const Vector> features) {
  if (slate.size() != features.size() || slate.size() != rewards.size()) {
    throw DimensionMismatch("slate, rewards and features must have equal length");
  }
  stats.update(features, rewards);
  return stats;
}

void TheoryParams::validate() const {
  if (horizon < 0) throw PreconditionViolation("horizon must be >= 0");
  if (slate_size < 1 || relevance_dim < 1 || diversity_dim < 1) throw PreconditionViolation("K, d, m must be positive");
  if (!(lambda > 0.0)) throw PreconditionViolation("lambda must be > 0");
  if (!(delta > 0.0 && delta <= 1.0)) throw PreconditionViolation("delta must lie in (0, 1]");
  if (!(eta_norm_bound >= 0.0)) throw PreconditionViolation("eta norm bound must be >= 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw PreconditionViolation("gamma must lie in (0, 1]");
}

namespace {

// n(d+m)·log(1 + nK/((d+m)λ)) / (λ·log(1 + 1/λ))
double width_sum_radicand(const TheoryParams& p) {
  const double dm = p.relevance_dim + p.diversity_dim;
  const double n = static_cast<double>(p.horizon);
  return n * dm * std::log1p(n * p.slate_size / (dm * p.lambda)) / (p.lambda * std::log1p(1.0 / p.lambda));
}

}  // namespace

double theoretical_alpha(const TheoryParams& params) {
  params.validate();
  const double dm = params.relevance_dim + params.diversity_dim;
  const double n = static_cast<double>(params.horizon);
  const double radicand = dm * std::log1p(n * params.slate_size / (dm * params.lambda)) + 2.0 * std::log(1.0 / params.delta);
  return std::sqrt(radicand) + std::sqrt(params.lambda) * params.eta_norm_bound;
}

double lemma1_width_budget(const TheoryParams& params) {
  params.validate();
  return params.slate_size * std::sqrt(width_sum_radicand(params));
}

double regret_upper_bound(const TheoryParams& params, double alpha) {
  const double threshold = theoretical_alpha(params);
  if (alpha < threshold * (1.0 - 1e-12)) {
    std::ostringstream msg;
    msg << "alpha " << alpha << " is below the required " << threshold;
    throw PreconditionViolation(msg.str());
  }
  const double n = static_cast<double>(params.horizon);
  return 2.0 * alpha * params.slate_size / params.gamma * std::sqrt(width_sum_radicand(params)) +
         n * params.slate_size * params.delta;
}

LmdhPolicy::LmdhPolicy(std::shared_ptr<const ItemCatalog> catalog, LmdhConfig config, Execution exec)
    : catalog_(std::move(catalog)),
      config_(config),
      exec_(exec),
      stats_(config.relevance_dim, config.diversity_dim, config.lambda) {
  config_.validate();
  if (catalog_->relevance_dim() != config_.relevance_dim || catalog_->diversity_dim() != config_.diversity_dim) {
    throw DimensionMismatch("LMDH config dims do not match the catalog");
  }
}

Recommendation LmdhPolicy::select(std::span<const ItemId> candidates, int /*round*/) {
  SlateSelection selection = select_slate(stats_, config_, *catalog_, candidates, exec_);
  clamps_ += selection.negative_width_clamps;
  return Recommendation{std::move(selection.slate), std::move(selection.features), std::move(selection.widths)};
}

void LmdhPolicy::observe(const Recommendation& recommendation, std::span<const double> rewards) {
  if (recommendation.features.size() != recommendation.slate.size()) {
    throw DimensionMismatch("LMDH needs the features logged at selection time");
  }
  stats_.update(recommendation.features, rewards);
}

}  // namespace lmdb
