#pragma once
// Splittable random streams for Monte Carlo replications.
//
// Generator: xoshiro256** (Blackman & Vigna). A replication's stream is a pure
// function of (seed, stream index): the four state words are SplitMix64
// finalizations of a key derived from both, so no coordination between workers
// is needed and results do not depend on thread count or execution order.
//
// jump() advances the state by 2^128 draws (the published jump polynomial), for
// callers that want several non-overlapping sub-streams inside one replication.

#include <array>
#include <cstdint>

namespace evlab {

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  /// Stream `index` of the family keyed by `seed`.
  static Rng for_stream(std::uint64_t seed, std::uint64_t index);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() { return next(); }
  result_type next();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  /// Standard normal (Marsaglia polar method; spare value cached).
  double normal();
  double bernoulli(double p) { return uniform() < p ? 1.0 : 0.0; }
  /// Gamma(shape, 1) by Marsaglia-Tsang.
  double gamma(double shape);
  double beta(double a, double b);

  void jump();

  const std::array<std::uint64_t, 4>& state() const { return s_; }

 private:
  Rng() = default;

  std::array<std::uint64_t, 4> s_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer; exposed for seeding helpers and tests.
std::uint64_t mix64(std::uint64_t x);

}  // namespace evlab
