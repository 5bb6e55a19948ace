#pragma once

#include <cstdint>
#include <random>

namespace qfc {

// SplitMix64 finalizer. Used to derive independent per-trial seeds:
// seed_for(base, i) = splitmix64(base + (i + 1) * 0x9E3779B97F4A7C15).
std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

// Deterministic sampler on top of std::mt19937_64. The engine output is fixed
// by the standard; the variate transforms are implemented here so that a
// given seed produces the same draws with any standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Standard normal by Box-Muller; caches the second variate.
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  // Poisson variate: multiplication method below mean 10, PTRS above.
  std::int64_t poisson(double mean);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace qfc
