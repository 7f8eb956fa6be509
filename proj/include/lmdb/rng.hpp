#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace lmdb {

// Deterministic random source used everywhere in the library.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The standard distributions are NOT (their algorithms are
// implementation-defined), so all variates are derived here from raw engine
// output. Together this makes every seeded split, instance, and episode
// bit-identical across compilers and platforms.
//
// Seed derivation rule: a child stream for index i of an experiment seeded
// with s uses derive_seed(s, i) = splitmix64(s ^ splitmix64(i + 1)).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double low, double high) { return low + (high - low) * uniform(); }

  // Uniform integer in [0, bound) by rejection sampling; bound must be > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw = engine_();
    while (draw >= limit) draw = engine_();
    return draw % bound;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Fisher-Yates, walking from the back.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 1));
}

}  // namespace lmdb
