#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace spider {

// SplitMix64 finalizer. Used to derive independent per-instance seeds from a
// root seed so that every experiment cell is reproducible on its own.
std::uint64_t mix64(std::uint64_t x);

// Folds the parts into the root with mix64, left to right.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> parts);

// Portable generator: std::mt19937_64 is fully specified by the standard, and
// the conversions below avoid the implementation-defined std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on [lo, hi].
  double uniform(double lo, double hi);

  // Uniform integer in [0, n), unbiased.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace spider
