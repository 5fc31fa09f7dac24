#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "atlas/core.hpp"

namespace atlas {

// SplitMix64 (Steele/Lea/Vigna). The project-wide generator: synthetic data
// and seeded test fixtures depend on this exact bit stream, so the algorithm
// is part of the file-format contract and must never change.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n); rejection sampling keeps the draw unbiased.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) fail("next_below: empty range");
    std::uint64_t threshold = (0 - n) % n;
    while (true) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform integer in [lo, hi], inclusive.
  std::int64_t next_in(std::int64_t lo, std::int64_t hi) {
    if (lo > hi) fail("next_in: inverted range");
    return lo + static_cast<std::int64_t>(
                    next_below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; exactly two draws per sample.
  double next_normal() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Child stream decorrelated from the parent; forking does not advance the
  // parent state.
  SplitMix64 fork(std::uint64_t salt) const {
    SplitMix64 child(state_ ^ (0x9e3779b97f4a7c15ull * (salt + 0x632be59bd9b4e019ull)));
    child.next_u64();
    return child;
  }

 private:
  std::uint64_t state_;
};

}  // namespace atlas
