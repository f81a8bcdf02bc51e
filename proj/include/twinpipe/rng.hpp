#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace twinpipe {

/// The pinned PRNG for every seeded operation (splits, bootstraps, synthetic
/// scenarios). The algorithm name is recorded in run records and model
/// artifacts so seeded results stay auditable across implementations.
inline constexpr const char* kPrngName = "splitmix64";

class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [0, n) without modulo bias (Lemire's method).
  std::uint64_t bounded(std::uint64_t n) {
    if (n == 0) return 0;
    __uint128_t m = (__uint128_t)next() * n;
    std::uint64_t low = static_cast<std::uint64_t>(m);
    if (low < n) {
      std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = (__uint128_t)next() * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Standard normal via Box-Muller; draws two uniforms per call.
  double gaussian() {
    double u1;
    do {
      u1 = next_double();
    } while (u1 <= 0.0);
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(bounded(i));
      std::swap(v[i - 1], v[j]);
    }
  }

private:
  std::uint64_t state_;
};

/// Stable 64-bit name hash (FNV-1a) for deriving per-channel sub-seeds.
inline std::uint64_t name_hash(const char* s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (; *s; ++s) {
    h ^= static_cast<unsigned char>(*s);
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace twinpipe
