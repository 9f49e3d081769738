// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace sm2 {

// splitmix64 finalizer. Used both as a stateful generator step and as a
// counter-based hash (mix(seed ^ counter)).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Maps 64 random bits to a double in [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Deterministic generator with a single 64-bit state word, so it snapshots
// trivially. The standard distributions are implementation-defined, which
// would make datasets and initializations differ between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  double uniform() noexcept { return to_unit(next()); }

  // Box-Muller; discards the second variate so state advances by exactly two.
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, bound). Lemire-style rejection is overkill here;
  // modulo bias is below 2^-40 for the sizes this project uses.
  std::uint64_t below(std::uint64_t bound) noexcept { return next() % bound; }

  std::uint64_t state() const noexcept { return state_; }
  void set_state(std::uint64_t s) noexcept { state_ = s; }

 private:
  std::uint64_t state_;
};

// 64-bit FNV-1a, used for snapshot checksums, digests and fingerprints.
constexpr std::uint64_t fnv1a(const unsigned char* data, std::size_t n,
                              std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace sm2
