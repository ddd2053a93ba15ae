#pragma once

#include <cstdint>
#include <initializer_list>

namespace softvoronoi {

// SplitMix64 finaliser (Stafford "Mix13"). Bijective avalanche mixer on 64 bits.
std::uint64_t mix64(std::uint64_t x);

// Deterministic child seed: h = mix64(master); for each v: h = mix64(h ^ mix64(v + golden)).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

// xoshiro256** 1.0 seeded through SplitMix64. Only integer arithmetic and the
// transforms below are used, so streams are identical across platforms.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  result_type operator()() { return next(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer on [0, bound) by Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound);
  // Standard normal via Box-Muller (one draw per call, two uniforms consumed).
  double normal();

 private:
  std::uint64_t s_[4];
};

}  // namespace softvoronoi
