#pragma once

#include <cstdint>
#include <random>

namespace crossview {

/// Seeded random source. Engine and all variate transforms are fixed in code
/// so a seed reproduces the same stream on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }
  /// Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 uses the u^(1/shape) boost.
  double gamma(double shape);
  std::uint64_t poisson(double rate);

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::uint64_t poisson_inversion(double rate);
  std::uint64_t poisson_ptrs(double rate);

  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent stream seed from a base seed and a stream tag.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace crossview
