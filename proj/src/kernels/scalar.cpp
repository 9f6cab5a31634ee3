// Scalar reference kernels. Plain sequential loops over libm; the SIMD
// variants are tested against these.

#include <cmath>

#include "lbv/kernels/kernels.hpp"

namespace lbv::kernels {
namespace {

double s_reduce_sum(const double* x, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double s_reduce_max(const double* x, size_t n) {
  double m = x[0];
  for (size_t i = 1; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

double s_dot(const double* x, const double* y, size_t n) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void s_axpy(double a, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double s_centered_sumsq(const double* x, size_t n, double mean) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double d = x[i] - mean;
    s += d * d;
  }
  return s;
}

void s_exp_v(const double* x, double* out, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

double s_sum_exp_minus(const double* x, size_t n, double shift) {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += std::exp(x[i] - shift);
  return s;
}

void s_poisson_logprob(const double* theta, size_t n, double y, double* out) {
  for (size_t i = 0; i < n; ++i) out[i] = y * theta[i] - std::exp(theta[i]);
}

constexpr double kDegToRad = 0.017453292519943295;

void s_haversine_many(const double* lat, const double* lon, size_t n,
                      double lat0, double lon0, double* out) {
  const double phi0 = lat0 * kDegToRad;
  const double cos_phi0 = std::cos(phi0);
  for (size_t i = 0; i < n; ++i) {
    double phi = lat[i] * kDegToRad;
    double dphi_h = 0.5 * (phi - phi0);
    double dlam_h = 0.5 * kDegToRad * (lon[i] - lon0);
    double sp = std::sin(dphi_h);
    double sl = std::sin(dlam_h);
    double h = sp * sp + cos_phi0 * std::cos(phi) * sl * sl;
    if (h > 1.0) h = 1.0;
    out[i] = 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
  }
}

const Ops kScalarOps = {
    "scalar",       s_reduce_sum, s_reduce_max,     s_dot,
    s_axpy,         s_centered_sumsq, s_exp_v,      s_sum_exp_minus,
    s_poisson_logprob, s_haversine_many,
};

}  // namespace

const Ops& scalar_ops() { return kScalarOps; }

}  // namespace lbv::kernels
