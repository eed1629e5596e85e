#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace stmtl {

// Deterministic random streams. std::mt19937_64 output is fully specified
// by the standard, but std::*_distribution is not, so bounded draws and
// normals are generated here from raw 64-bit words. Every consumer derives
// its stream from (seed, substream ids), which keeps parallel schedules
// and platforms bit-identical.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed == 0 ? 0x9e3779b97f4a7c15ULL : seed) {}

  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    // SplitMix64 finalizer over a simple combine.
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static Rng derive(std::uint64_t seed, std::uint64_t s1) { return Rng(mix(seed, s1)); }
  static Rng derive(std::uint64_t seed, std::uint64_t s1, std::uint64_t s2) {
    return Rng(mix(mix(seed, s1), s2));
  }
  static Rng derive(std::uint64_t seed, std::uint64_t s1, std::uint64_t s2, std::uint64_t s3) {
    return Rng(mix(mix(mix(seed, s1), s2), s3));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Unbiased draw in [0, bound) by rejection.
  std::uint64_t uniform_below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % bound;
  }

  double uniform01() { return (next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    // Box-Muller; uniform01 is shifted away from 0 for the log.
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    cached_ = radius * std::sin(angle);
    have_cached_ = true;
    return radius * std::cos(angle);
  }

  // Uniform random subset of {0..n-1} of the given size, sorted ascending.
  std::vector<int> sample_without_replacement(int n, int size) {
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    for (int i = 0; i < size; ++i) {
      const int j = i + static_cast<int>(uniform_below(static_cast<std::uint64_t>(n - i)));
      std::swap(pool[i], pool[j]);
    }
    std::vector<int> out(pool.begin(), pool.begin() + size);
    std::sort(out.begin(), out.end());
    return out;
  }

  // Fisher-Yates permutation of {0..n-1}.
  std::vector<int> permutation(int n) {
    std::vector<int> out(n);
    for (int i = 0; i < n; ++i) out[i] = i;
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(uniform_below(static_cast<std::uint64_t>(i + 1)));
      std::swap(out[i], out[j]);
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace stmtl
