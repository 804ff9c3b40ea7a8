#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace aigw {

// Deterministic, splittable random source. Child streams are derived from
// the constructing seed and a stream name, so adding or reordering consumers
// never perturbs another stream's sequence. xoshiro256++ core, splitmix64
// seeding.
class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed) {
    uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
  }

  Rng child(std::string_view stream_name) const {
    return Rng(splitmix_once(seed_ ^ fnv1a64(stream_name)));
  }

  uint64_t next_u64() {
    uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1).
  double next_unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; hits exactly 1.0 when the raw draw is 0.
  double next_unit_open_low() { return 1.0 - next_unit(); }

  // Uniform on [lo, hi).
  double next_range(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
  }

  // Standard normal via Box-Muller; consumes exactly two draws.
  double next_normal() {
    double u1 = next_unit_open_low();
    double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  uint64_t seed() const { return seed_; }

 private:
  static constexpr double kPi = 3.14159265358979323846;

  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  static uint64_t splitmix64(uint64_t& x) {
    uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static uint64_t splitmix_once(uint64_t x) { return splitmix64(x); }

  static uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
      h ^= uint8_t(c);
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  uint64_t seed_ = 0;
  uint64_t state_[4] = {};
};

}  // namespace aigw
