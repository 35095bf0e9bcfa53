#pragma once

#include <cstdint>
#include <random>

namespace tilestream {

/// SplitMix64 finalizer. Used to derive independent sub-seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed for an independent sub-stream, e.g. (stream seed, tile index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Reproducible random source. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; the distributions below are implemented
// here rather than taken from <random> because the standard library
// distributions differ between vendors.
//
// Every raw 64-bit engine output increments draws().
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64();

  /// Uniform integer in [0, n). n must be > 0. Unbiased (Lemire rejection).
  std::uint64_t uniform_index(std::uint64_t n);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  std::uint64_t draws() const noexcept { return draws_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

}  // namespace tilestream
