#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace lbv {

// Standard normal CDF via erfc.
double normal_cdf(double x);

// Standard normal quantile. Rational approximation refined by one Halley
// step against normal_cdf; relative error well below 1e-12 away from the
// endpoints. p must lie in (0, 1).
double normal_quantile(double p);

// Digamma for x > 0. Recurrence up to the asymptotic range, then the
// standard Bernoulli-series expansion.
double digamma(double x);

// log(k!) for k = 0..n as a table.
std::vector<double> log_factorial_table(int64_t n);

uint64_t fnv1a64(std::string_view bytes);

}  // namespace lbv
