#pragma once

#include <cstdint>
#include <random>

// Seeded randomness helpers.  std::mt19937_64 is pinned by the standard, but
// the distribution classes are not, so we map raw draws to doubles by hand to
// keep reports byte-identical across standard libraries.

namespace hjb {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) { return eng_() % n; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace hjb
