#pragma once

// Seedable counter-based random generator used everywhere randomness is
// needed (sampling, splits, weight init, synthetic fires). The generator is
// SplitMix64: state advances by a fixed odd constant, output is a finalizer
// hash of the state. Identical seeds give identical streams on every
// platform and build; nothing here depends on std::random distributions.
//
// Draw-order conventions that other modules rely on:
//   - bounded ints come from Lemire's multiply-shift with rejection
//     (exactly uniform, at least one raw draw each),
//   - unit reals use the top 53 bits of one raw draw,
//   - normals use Box-Muller on two unit reals (second value cached),
//   - permutations use Fisher-Yates from the top index downward.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace wildfire {

namespace detail {
inline uint64_t splitmix64_finalize(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
}  // namespace detail

class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : state_(seed) {}

  // Raw 64-bit draw.
  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return detail::splitmix64_finalize(state_);
  }

  // Uniform integer in [0, bound). bound must be nonzero.
  uint64_t uniform_below(uint64_t bound) {
    uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    uint64_t lo = static_cast<uint64_t>(m);
    if (lo < bound) {
      uint64_t threshold = (0 - bound) % bound;
      while (lo < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * bound;
        lo = static_cast<uint64_t>(m);
      }
    }
    return static_cast<uint64_t>(m >> 64);
  }

  // Uniform real in [0, 1) with 53-bit resolution.
  double uniform_real() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; every other call is served from cache.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = uniform_real();
    while (u1 <= 0.0) u1 = uniform_real();
    double u2 = uniform_real();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

  // Independent child stream; children with distinct ids do not collide
  // with each other or with the parent for any practical draw count.
  Rng stream(uint64_t id) const {
    uint64_t child = detail::splitmix64_finalize(state_ ^ 0x6A09E667F3BCC909ull);
    child = detail::splitmix64_finalize(child + 0x9E3779B97F4A7C15ull * (id + 1));
    return Rng(child);
  }

  uint64_t state() const { return state_; }

 private:
  uint64_t state_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

// In-place Fisher-Yates shuffle, iterating i = n-1 .. 1, j = uniform_below(i+1).
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.uniform_below(i));
    std::swap(items[i - 1], items[j]);
  }
}

// Row-major index permutation of [0, n); the first k entries of the result
// are a uniform without-replacement draw of k indices.
inline std::vector<uint32_t> index_permutation(uint32_t n, Rng& rng) {
  std::vector<uint32_t> ids(n);
  for (uint32_t i = 0; i < n; ++i) ids[i] = i;
  shuffle(ids, rng);
  return ids;
}

}  // namespace wildfire
