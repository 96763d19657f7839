#pragma once

// Splittable deterministic RNG. std::* distributions are implementation
// defined, so sampling is done by hand to keep results reproducible across
// toolchains. Streams are derived hierarchically from (seed, tags...) so any
// work unit (cell, replication, fold, role) gets an independent generator
// regardless of scheduling order.

#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace rlearn {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

// Fixed role tags for derived streams; numeric tags (cell, rep, fold ids) are
// passed alongside.
enum class Stream : std::uint64_t {
  train = 1,
  test = 2,
  folds = 3,
  search = 4,
  noise = 5,
  arm0 = 6,
  arm1 = 7,
  propensity = 8,
  outcome = 9,
};

// xoshiro256++ seeded through splitmix64. The construction seed is kept so
// children derive from the seed, not from the evolving state: two derivations
// with equal tags always agree no matter how much the parent has been used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = detail::splitmix64(s);
  }

  template <class... Tags>
  Rng derive(Tags... tags) const {
    std::uint64_t s = seed_;
    ((s = derive_one(s, static_cast<std::uint64_t>(tags))), ...);
    return Rng(s);
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller; the pair partner is cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = 1.0 - uniform01();  // (0,1], keeps log finite
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    cached_ = radius * std::sin(angle);
    have_cached_ = true;
    return radius * std::cos(angle);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Uniform integer in [0, n) by rejection on the low bits.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
    const std::uint64_t mask = mask_for(n);
    std::uint64_t draw;
    do {
      draw = next_u64() & mask;
    } while (draw >= n);
    return draw;
  }

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_int(i)]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  static std::uint64_t mask_for(std::uint64_t n) {
    std::uint64_t mask = n - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    return mask;
  }

  static std::uint64_t derive_one(std::uint64_t s, std::uint64_t tag) {
    std::uint64_t k = s ^ (tag + 0x9e3779b97f4a7c15ULL);
    return detail::splitmix64(k);
  }

  std::uint64_t seed_ = 0;
  std::uint64_t state_[4] = {};
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace rlearn
