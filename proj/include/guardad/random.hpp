#pragma once

// Portable seeded randomness. Everything that has to replay byte-for-byte
// goes through these instead of <random> distributions, whose outputs differ
// between standard libraries.

#include <cstdint>
#include <initializer_list>

namespace guardad {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Order-sensitive hash of a tuple of words.
constexpr std::uint64_t hash_words(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x5EED5EED5EED5EEDull;
  for (std::uint64_t w : words) h = splitmix64(h ^ w);
  return h;
}

/// Uniform double in [0, 1) from the top 53 bits.
constexpr double unit_from_bits(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  constexpr double uniform() { return unit_from_bits(next()); }

  /// Integer in [lo, hi]. The modulo bias is irrelevant at these ranges.
  constexpr std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::uint64_t state_;
};

}  // namespace guardad
