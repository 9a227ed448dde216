#pragma once

// Portable, bit-reproducible random streams: xoshiro256** seeded through
// splitmix64. Distributions are implemented here rather than taken from
// <random>, whose distribution algorithms differ between standard libraries.

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace laya {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Independent streams for one seed are separated by a purpose tag.
enum class Stream : std::uint64_t {
  init = 0x696E6974ULL,     // parameter initialisation
  split = 0x73706C74ULL,    // train/validation split
  shuffle = 0x73687566ULL,  // per-epoch batch order
  data = 0x64617461ULL,     // synthetic data generation
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
  }
  Rng(std::uint64_t seed, Stream stream)
      : Rng(seed ^ (static_cast<std::uint64_t>(stream) * 0xD1342543DE82EF95ULL)) {}

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (one draw per call, second value cached).
  double normal();

  // Uniform integer in [0, n) by rejection (unbiased).
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace laya
