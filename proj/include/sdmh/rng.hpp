#pragma once

#include <cstdint>
#include <random>

namespace sdmh {

/// Seeded random stream.
///
/// The engine is std::mt19937_64 seeded with a 64-bit value; uniforms are
/// built from the top 53 bits of one engine output. Child streams are
/// derived by hashing (seed, stream index) with SplitMix64, so independent
/// chains or generator stages started from one master seed are reproducible
/// and do not overlap in practice. Normal, gamma, Poisson and binomial
/// variates use the libstdc++ distributions, which makes traces
/// bit-reproducible for a given build.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  std::uint64_t seed() const { return seed_; }

  /// Independent child stream number `stream`.
  Rng split(std::uint64_t stream) const;

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1); safe to take the logarithm of.
  double uniform_open();
  /// Uniform integer on {0, ..., n-1}, n >= 1.
  std::uint64_t uniform_index(std::uint64_t n);

  double normal();
  double gamma(double shape);
  std::uint64_t poisson(double mean);
  std::uint64_t binomial(std::uint64_t trials, double p);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace sdmh
