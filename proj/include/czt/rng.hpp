#pragma once

#include <cmath>
#include <cstdint>

namespace czt {

// Deterministic 64-bit generator (splitmix64). Used instead of std
// distributions so that capture masks, synthetic corpora and simulations
// replay bit-identically across platforms and thread schedules.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double next_range(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Uniform integer in [0, n). Modulo bias is negligible for n << 2^64.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller; consumes exactly two draws.
  double next_normal() {
    double u1 = next_unit();
    double u2 = next_unit();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Exponential with given rate (events per unit).
  double next_exponential(double rate) {
    double u = next_unit();
    return -std::log(1.0 - u) / rate;
  }

 private:
  std::uint64_t state_;
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdull;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ull;
  x ^= x >> 33;
  return x;
}
}  // namespace detail

// Derives an independent substream seed from a base seed and up to three
// tags (e.g. block ordinal, vehicle id, purpose). Changing any tag yields an
// unrelated stream, so consumers can draw independently and in parallel.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  std::uint64_t h = detail::mix64(seed ^ 0x2545f4914f6cdd1dull);
  h = detail::mix64(h ^ a);
  h = detail::mix64(h ^ b);
  h = detail::mix64(h ^ c);
  return h;
}

}  // namespace czt
