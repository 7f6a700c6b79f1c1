#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace entromap {

/// Raised for every contract violation and malformed input in the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kVersion = "0.1.0";

// x * log2(x) with 0 log 0 := 0. Tiny negative round-off is treated as zero.
inline double plogp(double x) { return x > 0.0 ? x * std::log2(x) : 0.0; }

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng{seq};
}

// Uniform integer in [0, n). The engine output is fully specified by the
// standard, so this (unlike std::uniform_int_distribution) is portable.
inline std::size_t bounded(Rng& rng, std::size_t n) {
  const std::uint64_t range = n;
  const std::uint64_t limit = Rng::max() - (Rng::max() % range);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % range);
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[bounded(rng, i)]);
  }
}

// FNV-1a, used for stable content hashes in run manifests.
inline std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace entromap
