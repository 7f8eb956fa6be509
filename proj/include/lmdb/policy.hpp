#pragma once

#include "lmdb/features.hpp"

#include <span>
#include <string>
#include <vector>

namespace lmdb {

/// One round's output of a policy.
struct Recommendation {
  Slate slate;
  /// Δ(a_k | a_1..a_{k-1}) as seen at selection time, one per position.
  /// Policies that do not learn from features may leave this empty.
  std::vector<Vector> features;
  /// √v for each position; empty for policies without confidence widths.
  std::vector<double> widths;
};

/// Common interface of LMDH and the baselines. select() must return exactly
/// K distinct candidates whenever at least K are offered.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual Recommendation select(std::span<const ItemId> candidates, int round) = 0;
  virtual void observe(const Recommendation& recommendation, std::span<const double> rewards) = 0;
};

}  // namespace lmdb
