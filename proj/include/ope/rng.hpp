#pragma once

#include <cmath>
#include <cstdint>

namespace ope {

// xoshiro256++ with splitmix64 seeding. Distributions are implemented inline
// so that output streams are stable across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& word : s_) word = splitmix64(x);
  }

  // Independent stream for a (seed, index) pair. Replicate i depends only on
  // (base_seed, i), never on execution order.
  static Rng stream(uint64_t base_seed, uint64_t index) {
    uint64_t x = base_seed;
    uint64_t a = splitmix64(x);
    x ^= (index + 1) * 0x9e3779b97f4a7c15ULL;
    uint64_t b = splitmix64(x);
    return Rng(a ^ (b + 0x632be59bd9b4e019ULL));
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, one value per call; no cached spare.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  double exponential(double rate) { return -std::log(1.0 - uniform()) / rate; }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform on {0, .., n-1} via rejection-free scaling (n is tiny here).
  int uniform_int(int n) { return static_cast<int>(uniform() * n); }

 private:
  static uint64_t splitmix64(uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  static uint64_t rotl(uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  uint64_t s_[4];
};

}  // namespace ope
