#pragma once

// Arithmetic inner-loop kernels. Every operation has a scalar reference
// implementation and, on x86-64 with AVX2+FMA, a vectorized variant.
// The active backend is resolved once at startup: the LBV_KERNEL
// environment variable ("scalar", "avx2", "auto") overrides CPU
// detection. Scalar and SIMD variants are equivalence-tested against
// each other; they may differ by reduction rounding only.

#include <cstddef>
#include <cstdint>

namespace lbv::kernels {

struct Ops {
  const char* name;

  // sum of x[0..n)
  double (*reduce_sum)(const double* x, size_t n);
  // max of x[0..n); n must be >= 1
  double (*reduce_max)(const double* x, size_t n);
  // sum of x[i]*y[i]
  double (*dot)(const double* x, const double* y, size_t n);
  // y[i] += a*x[i]
  void (*axpy)(double a, const double* x, double* y, size_t n);
  // sum of (x[i]-mean)^2
  double (*centered_sumsq)(const double* x, size_t n, double mean);
  // out[i] = exp(x[i])
  void (*exp_v)(const double* x, double* out, size_t n);
  // sum of exp(x[i]-shift)
  double (*sum_exp_minus)(const double* x, size_t n, double shift);
  // out[i] = y*theta[i] - exp(theta[i])   (Poisson log-kernel, constants dropped)
  void (*poisson_logprob)(const double* theta, size_t n, double y, double* out);
  // great-circle distance in meters from (lat0,lon0) to each (lat[i],lon[i]),
  // haversine on a sphere of radius 6'371'000 m, inputs in degrees
  void (*haversine_many)(const double* lat, const double* lon, size_t n,
                         double lat0, double lon0, double* out);
};

// Always available.
const Ops& scalar_ops();

// Null when the binary or CPU lacks AVX2+FMA.
const Ops* avx2_ops();

// Backend picked by LBV_KERNEL / CPU detection; stable for the process.
const Ops& active();
const char* active_name();

constexpr double kEarthRadiusM = 6371000.0;

}  // namespace lbv::kernels
