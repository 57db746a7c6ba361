#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace edad {

/// Counter-based generator: the i-th draw is a pure function of (key, i),
/// so streams split by tag are reproducible independent of draw order
/// elsewhere. Distributions are implemented here rather than taken from
/// <random> so output is identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  /// Independent child stream.
  Rng split(std::uint64_t tag) const;
  Rng split(std::string_view tag) const;

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal (Box-Muller, one value per call).
  double normal();
  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);
  /// Uniform random permutation of 0..n-1 (Fisher-Yates).
  std::vector<std::size_t> permutation(std::size_t n);
  /// k distinct values from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

  static std::uint64_t mix(std::uint64_t x);

 private:
  Rng(std::uint64_t key, int) : key_(key) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace edad
