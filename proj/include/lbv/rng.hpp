#pragma once

// Deterministic random draws. All distributions are derived from the raw
// mt19937_64 output stream with fixed algorithms, so sequences are
// reproducible across standard libraries and platforms.
//
// Stream splitting rule: substream(master, tag, index) seeds with
// splitmix64(splitmix64(master ^ fnv1a64(tag)) + index). Documented here
// because generators and fits advertise determinism as a contract.

#include <cstdint>
#include <random>
#include <string_view>

namespace lbv {

uint64_t splitmix64(uint64_t x);

class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  static Rng substream(uint64_t master, std::string_view tag, uint64_t index);

  uint64_t next_u64() { return gen_(); }

  // Uniform on [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1), endpoints excluded.
  double uniform_open01();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via inverse CDF.
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  double exponential() ;

  // Exact Poisson draw (product method, chunked so large means do not
  // underflow). O(lambda) uniforms.
  int64_t poisson(double lambda);

  // Gamma(shape, scale=1), Marsaglia-Tsang; shape < 1 handled by boosting.
  double gamma(double shape);

 private:
  std::mt19937_64 gen_;
};

}  // namespace lbv
