#ifndef NUCLR_RNG_HPP
#define NUCLR_RNG_HPP

#include <cmath>
#include <cstdint>

namespace nuclr {

// Counter-based 64-bit generator. Output k of stream (seed, stream) is
//
//   mix(key + (k+1) * GOLDEN),   key = mix(mix(seed) ^ (GOLDEN * (stream+1)))
//
// where mix is the SplitMix64 finalizer. Jumping to any position is O(1),
// so parallel workers own disjoint streams of one seed and every draw is
// replayable from (seed, stream, counter) alone.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(mix(seed) ^ (kGolden * (stream + 1)))), counter_(0) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() { return mix(key_ + kGolden * (++counter_)); }

  // Uniform on [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; consumes exactly two uniforms per call
  // (no cached spare, so the stream position stays easy to reason about).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Uniform integer in [0, n), n >= 1. Modulo bias is < 2^-53 for the
  // range sizes used here (n well below 2^32).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace nuclr

#endif  // NUCLR_RNG_HPP
