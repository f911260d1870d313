#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace asrsim {

// std::uniform_int_distribution and friends are implementation-defined, so
// every draw here is built directly on the engine output. mt19937_64's output
// sequence is fixed by the standard, which makes samples identical across
// compilers and standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n) {
    // Rejection sampling over the largest multiple of n.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

  /// Uniform double in [0, 1) with 53 bits of resolution.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(std::uint64_t h, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) {
    h ^= (value >> (8 * i)) & 0xffU;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Stable per-record seed from (master seed, record id, index). Independent of
/// processing order and platform.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view id,
                                 std::uint64_t index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = detail::fnv1a(h, master_seed);
  h = detail::fnv1a(h, id);
  h = detail::fnv1a(h, std::string_view("\0", 1));
  h = detail::fnv1a(h, index);
  return detail::splitmix64(h);
}

}  // namespace asrsim
