#include "lbv/rng.hpp"

#include <cmath>
#include <stdexcept>

#include "lbv/mathfn.hpp"

namespace lbv {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

Rng Rng::substream(uint64_t master, std::string_view tag, uint64_t index) {
  return Rng(splitmix64(splitmix64(master ^ fnv1a64(tag)) + index));
}

double Rng::uniform_open01() {
  double u = uniform01();
  if (u <= 0.0) u = 0x1.0p-53;
  return u;
}

double Rng::normal() {
  return normal_quantile(uniform_open01());
}

double Rng::exponential() {
  return -std::log(uniform_open01());
}

int64_t Rng::poisson(double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("poisson: lambda must be >= 0");
  // Split into independent chunks of at most 500 so exp(-chunk) stays in
  // the normal double range; Poisson counts add across chunks.
  int64_t total = 0;
  while (lambda > 0.0) {
    double chunk = lambda > 500.0 ? 500.0 : lambda;
    lambda -= chunk;
    const double threshold = std::exp(-chunk);
    int64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform_open01();
    } while (p > threshold);
    total += k - 1;
  }
  return total;
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
  if (shape < 1.0) {
    double u = uniform_open01();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = uniform_open01();
    double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace lbv
