#pragma once

#include <cmath>
#include <cstdint>

namespace kidlab {

// SplitMix64, used both for seeding and for deriving child stream seeds.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t hash_seed(uint64_t a, uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b + 0x9e3779b97f4a7c15ULL));
}

inline uint64_t hash_seed(uint64_t a, uint64_t b, uint64_t c) {
  return hash_seed(hash_seed(a, b), c);
}

inline uint64_t hash_seed(uint64_t a, uint64_t b, uint64_t c, uint64_t d) {
  return hash_seed(hash_seed(a, b, c), d);
}

// xoshiro256**. Self-contained so that streams are reproducible independent
// of the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& word : state_) {
      x = splitmix64(x);
      word = x;
    }
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_real() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n). Modulo bias is ~n / 2^64, irrelevant at our ranges.
  uint64_t next_below(uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

  // Uniform in [lo, hi] inclusive.
  int next_int(int lo, int hi) {
    return lo + int(next_below(uint64_t(hi - lo + 1)));
  }

  bool next_bool(double p_true) { return next_real() < p_true; }

  // Box-Muller, two fresh uniforms per call.
  double next_normal(double mean = 0.0, double stddev = 1.0) {
    double u1 = next_real();
    double u2 = next_real();
    while (u1 <= 0.0) u1 = next_real();
    double z = std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    return mean + stddev * z;
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  uint64_t state_[4];
};

}  // namespace kidlab
