// AVX2+FMA kernel variants. Compiled with -mavx2 -mfma; selected at
// runtime only when the CPU reports both features.
//
// exp/sin/cos use Cody-Waite range reduction with fdlibm-style kernel
// polynomials; worst-case error is a couple of ulp, which the kernel
// equivalence suite pins against the scalar reference.

#include "lbv/kernels/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

namespace lbv::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// ---- exp -------------------------------------------------------------

// 2^k for integer lanes k in [-1022, 1023], built from the exponent bits.
inline __m256d pow2i(__m128i k32) {
  __m256i k64 = _mm256_cvtepi32_epi64(k32);
  __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52);
  return _mm256_castsi256_pd(bits);
}

inline __m256d exp4(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
  const __m256d overflow = _mm256_set1_pd(709.782712893384);
  const __m256d underflow = _mm256_set1_pd(-745.1332191019412);

  // n = nearest integer to x/ln2; r = x - n*ln2 via two-term reduction.
  __m128i n32 = _mm256_cvtpd_epi32(_mm256_mul_pd(x, log2e));
  __m256d n = _mm256_cvtepi32_pd(n32);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, x);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);

  // exp(r) on |r| <= ln2/2, Taylor to degree 13.
  __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);  // 1/13!
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
  p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

  // Scale by 2^n in two exact halves so subnormal results round once.
  __m128i n2 = _mm_srai_epi32(n32, 1);
  __m128i n1 = _mm_sub_epi32(n32, n2);
  __m256d res = _mm256_mul_pd(_mm256_mul_pd(p, pow2i(n1)), pow2i(n2));

  __m256d inf = _mm256_set1_pd(HUGE_VAL);
  res = _mm256_blendv_pd(res, inf, _mm256_cmp_pd(x, overflow, _CMP_GT_OQ));
  res = _mm256_blendv_pd(res, _mm256_setzero_pd(), _mm256_cmp_pd(x, underflow, _CMP_LT_OQ));
  return res;
}

// ---- sin / cos on |x| <= pi + eps ------------------------------------

struct SinCos4 {
  __m256d s;
  __m256d c;
};

inline SinCos4 sincos4(__m256d x) {
  const __m256d two_over_pi = _mm256_set1_pd(0.63661977236758134308);
  const __m256d pio2_1 = _mm256_set1_pd(1.57079632673412561417e+00);
  const __m256d pio2_1t = _mm256_set1_pd(6.07710050650619224932e-11);

  __m128i j32 = _mm256_cvtpd_epi32(_mm256_mul_pd(x, two_over_pi));
  __m256d j = _mm256_cvtepi32_pd(j32);
  __m256d r = _mm256_fnmadd_pd(j, pio2_1, x);
  r = _mm256_fnmadd_pd(j, pio2_1t, r);
  __m256d y = _mm256_mul_pd(r, r);

  // sin kernel: r + r^3 * P(y)
  __m256d ps = _mm256_set1_pd(1.58969099521155010221e-10);
  ps = _mm256_fmadd_pd(ps, y, _mm256_set1_pd(-2.50507602534068634195e-08));
  ps = _mm256_fmadd_pd(ps, y, _mm256_set1_pd(2.75573137070700676789e-06));
  ps = _mm256_fmadd_pd(ps, y, _mm256_set1_pd(-1.98412698298579493134e-04));
  ps = _mm256_fmadd_pd(ps, y, _mm256_set1_pd(8.33333333332248946124e-03));
  ps = _mm256_fmadd_pd(ps, y, _mm256_set1_pd(-1.66666666666666324348e-01));
  __m256d kern_s = _mm256_fmadd_pd(_mm256_mul_pd(y, r), ps, r);

  // cos kernel: 1 - y/2 + y^2 * Q(y)
  __m256d pc = _mm256_set1_pd(-1.13596475577881948265e-11);
  pc = _mm256_fmadd_pd(pc, y, _mm256_set1_pd(2.08757232129817482790e-09));
  pc = _mm256_fmadd_pd(pc, y, _mm256_set1_pd(-2.75573143513906633035e-07));
  pc = _mm256_fmadd_pd(pc, y, _mm256_set1_pd(2.48015872894767294178e-05));
  pc = _mm256_fmadd_pd(pc, y, _mm256_set1_pd(-1.38888888888741095749e-03));
  pc = _mm256_fmadd_pd(pc, y, _mm256_set1_pd(4.16666666666666019037e-02));
  __m256d kern_c = _mm256_fmadd_pd(_mm256_mul_pd(y, y), pc,
                                   _mm256_fnmadd_pd(y, _mm256_set1_pd(0.5), _mm256_set1_pd(1.0)));

  // Quadrant q = j mod 4 picks kernel and sign.
  __m128i q32 = _mm_and_si128(j32, _mm_set1_epi32(3));
  __m256i q = _mm256_cvtepi32_epi64(q32);
  __m256d q_is1 = _mm256_castsi256_pd(_mm256_cmpeq_epi64(q, _mm256_set1_epi64x(1)));
  __m256d q_is2 = _mm256_castsi256_pd(_mm256_cmpeq_epi64(q, _mm256_set1_epi64x(2)));
  __m256d q_is3 = _mm256_castsi256_pd(_mm256_cmpeq_epi64(q, _mm256_set1_epi64x(3)));
  __m256d swap = _mm256_or_pd(q_is1, q_is3);  // odd quadrant: sin<->cos

  __m256d neg = _mm256_set1_pd(-0.0);
  __m256d sin_base = _mm256_blendv_pd(kern_s, kern_c, swap);
  __m256d sin_sign = _mm256_and_pd(_mm256_or_pd(q_is2, q_is3), neg);
  __m256d cos_base = _mm256_blendv_pd(kern_c, kern_s, swap);
  __m256d cos_sign = _mm256_and_pd(_mm256_or_pd(q_is1, q_is2), neg);

  SinCos4 out;
  out.s = _mm256_xor_pd(sin_base, sin_sign);
  out.c = _mm256_xor_pd(cos_base, cos_sign);
  return out;
}

// ---- kernels ---------------------------------------------------------

double v_reduce_sum(const double* x, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double v_reduce_max(const double* x, size_t n) {
  size_t i = 0;
  double m = x[0];
  if (n >= 4) {
    __m256d acc = _mm256_loadu_pd(x);
    i = 4;
    for (; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    m = lanes[0];
    for (int k = 1; k < 4; ++k)
      if (lanes[k] > m) m = lanes[k];
  }
  for (; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

double v_dot(const double* x, const double* y, size_t n) {
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void v_axpy(double a, const double* x, double* y, size_t n) {
  __m256d av = _mm256_set1_pd(a);
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

double v_centered_sumsq(const double* x, size_t n, double mean) {
  __m256d mv = _mm256_set1_pd(mean);
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), mv);
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) {
    double d = x[i] - mean;
    s += d * d;
  }
  return s;
}

void v_exp_v(const double* x, double* out, size_t n) {
  size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, exp4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = std::exp(x[i]);
}

double v_sum_exp_minus(const double* x, size_t n, double shift) {
  __m256d sv = _mm256_set1_pd(shift);
  __m256d acc = _mm256_setzero_pd();
  size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_add_pd(acc, exp4(_mm256_sub_pd(_mm256_loadu_pd(x + i), sv)));
  double s = hsum(acc);
  for (; i < n; ++i) s += std::exp(x[i] - shift);
  return s;
}

void v_poisson_logprob(const double* theta, size_t n, double y, double* out) {
  __m256d yv = _mm256_set1_pd(y);
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d t = _mm256_loadu_pd(theta + i);
    _mm256_storeu_pd(out + i, _mm256_fmsub_pd(yv, t, exp4(t)));
  }
  for (; i < n; ++i) out[i] = y * theta[i] - std::exp(theta[i]);
}

constexpr double kDegToRad = 0.017453292519943295;

void v_haversine_many(const double* lat, const double* lon, size_t n,
                      double lat0, double lon0, double* out) {
  const double phi0 = lat0 * kDegToRad;
  const double cos_phi0 = std::cos(phi0);
  const __m256d d2r = _mm256_set1_pd(kDegToRad);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d phi0v = _mm256_set1_pd(phi0);
  const __m256d lon0v = _mm256_set1_pd(lon0);
  const __m256d cphi0 = _mm256_set1_pd(cos_phi0);
  const __m256d one = _mm256_set1_pd(1.0);

  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d phi = _mm256_mul_pd(_mm256_loadu_pd(lat + i), d2r);
    __m256d dphi_h = _mm256_mul_pd(half, _mm256_sub_pd(phi, phi0v));
    __m256d dlam_h = _mm256_mul_pd(half, _mm256_mul_pd(d2r, _mm256_sub_pd(_mm256_loadu_pd(lon + i), lon0v)));
    __m256d sp = sincos4(dphi_h).s;
    __m256d sl = sincos4(dlam_h).s;
    __m256d cp = sincos4(phi).c;
    __m256d cross = _mm256_mul_pd(_mm256_mul_pd(cphi0, cp), _mm256_mul_pd(sl, sl));
    __m256d h = _mm256_fmadd_pd(sp, sp, cross);
    h = _mm256_min_pd(h, one);
    alignas(32) double root[4];
    _mm256_store_pd(root, _mm256_sqrt_pd(h));
    for (int k = 0; k < 4; ++k) out[i + k] = 2.0 * kEarthRadiusM * std::asin(root[k]);
  }
  for (; i < n; ++i) {
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

const Ops kAvx2Ops = {
    "avx2",         v_reduce_sum, v_reduce_max,     v_dot,
    v_axpy,         v_centered_sumsq, v_exp_v,      v_sum_exp_minus,
    v_poisson_logprob, v_haversine_many,
};

}  // namespace

const Ops* avx2_ops_impl() {
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &kAvx2Ops;
  return nullptr;
}

}  // namespace lbv::kernels

#endif  // x86-64
