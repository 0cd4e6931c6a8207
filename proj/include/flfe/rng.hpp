#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace flfe {

/// SplitMix64 generator. Every seeded artifact in the project flows through
/// this engine so that identical seeds reproduce identical bytes on any
/// platform; the standard <random> distributions are implementation-defined
/// and are deliberately not used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  /// Uniform index in [0, n). n must be positive.
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

  bool bernoulli(double p) { return next_unit() < p; }

  /// Fisher-Yates shuffle driven by this engine.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

/// Deterministically derives a child seed from a base seed and a tag.
/// Used wherever an operation needs its own stream (per loop, per tree,
/// per candidate) without consuming from the parent stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ull ^ base;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  // one splitmix round to spread low-entropy tags
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
  return h ^ (h >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  Rng r(base ^ (salt * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull));
  return r.next_u64();
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t salt) {
  return derive_seed(derive_seed(base, tag), salt);
}

}  // namespace flfe
