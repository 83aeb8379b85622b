#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace fstk {

// std::mt19937_64 emits a bit-exact stream on every conforming platform, but
// the standard <random> distributions do not, so the draws below are spelled
// out by hand. Anything that must reproduce byte-identically goes through
// this class.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t uniform_index(std::uint64_t n);

  // Double in [0, 1) with 53 random bits.
  double uniform_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform_in(double a, double b) {
    return a + (b - a) * uniform_double();
  }

  // Standard normal, Box-Muller with a cached spare.
  double normal();

  double sign() { return (next_u64() & 1ull) ? -1.0 : 1.0; }

  // k distinct indices from [0, n), returned in ascending order.
  std::vector<std::uint64_t> sample_without_replacement(std::uint64_t n,
                                                        std::uint64_t k);

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Decorrelated sub-seed for an independent stream (splitmix64 finalizer over
// seed ^ tag). Used wherever one user-facing seed feeds several draws.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace fstk
