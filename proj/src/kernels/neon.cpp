#if defined(__aarch64__)

#include <arm_neon.h>

#include <cstdint>
#include <limits>

#include "exp_poly.hpp"
#include "nuclr/kernels.hpp"

namespace nuclr::kern {
namespace {

using namespace detail;

inline float64x2_t exp2d(float64x2_t x) {
  const float64x2_t lo = vdupq_n_f64(kExpLo);
  const float64x2_t hi = vdupq_n_f64(kExpHi);
  const uint64x2_t under = vcltq_f64(x, lo);
  const uint64x2_t over = vcgtq_f64(x, hi);
  x = vminq_f64(vmaxq_f64(x, lo), hi);

  const float64x2_t k = vrndnq_f64(vmulq_f64(x, vdupq_n_f64(kLog2E)));
  float64x2_t r = vfmsq_f64(x, k, vdupq_n_f64(kLn2Hi));
  r = vfmsq_f64(r, k, vdupq_n_f64(kLn2Lo));

  const float64x2_t rr = vmulq_f64(r, r);
  float64x2_t p = vdupq_n_f64(kExpP0);
  p = vfmaq_f64(vdupq_n_f64(kExpP1), p, rr);
  p = vfmaq_f64(vdupq_n_f64(kExpP2), p, rr);
  p = vmulq_f64(p, r);
  float64x2_t q = vdupq_n_f64(kExpQ0);
  q = vfmaq_f64(vdupq_n_f64(kExpQ1), q, rr);
  q = vfmaq_f64(vdupq_n_f64(kExpQ2), q, rr);
  q = vfmaq_f64(vdupq_n_f64(kExpQ3), q, rr);
  float64x2_t e = vdivq_f64(vmulq_f64(vdupq_n_f64(2.0), p), vsubq_f64(q, p));
  e = vaddq_f64(e, vdupq_n_f64(1.0));

  const int64x2_t k64 = vcvtq_s64_f64(k);
  const int64x2_t bits = vshlq_n_s64(vaddq_s64(k64, vdupq_n_s64(1023)), 52);
  e = vmulq_f64(e, vreinterpretq_f64_s64(bits));

  e = vbslq_f64(under, vdupq_n_f64(0.0), e);
  e = vbslq_f64(over, vdupq_n_f64(std::numeric_limits<double>::infinity()), e);
  return e;
}

void exp_v_neon(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, exp2d(vld1q_f64(x + i)));
  for (; i < n; ++i) out[i] = exp_poly_scalar(x[i]);
}

double exp_shift_sum_neon(const double* s, const double* z, double shift,
                          double inv_tau, double* out, std::size_t n) {
  const float64x2_t vshift = vdupq_n_f64(shift);
  const float64x2_t vinv = vdupq_n_f64(inv_tau);
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t a = vld1q_f64(s + i);
    if (z) a = vsubq_f64(a, vld1q_f64(z + i));
    a = vmulq_f64(vsubq_f64(a, vshift), vinv);
    const float64x2_t e = exp2d(a);
    if (out) vst1q_f64(out + i, e);
    acc = vaddq_f64(acc, e);
  }
  double total = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  for (; i < n; ++i) {
    const double a = ((z ? s[i] - z[i] : s[i]) - shift) * inv_tau;
    const double e = exp_poly_scalar(a);
    if (out) out[i] = e;
    total += e;
  }
  return total;
}

double max_minus_neon(const double* s, const double* z, std::size_t n) {
  std::size_t i = 0;
  double m = -std::numeric_limits<double>::infinity();
  if (n >= 2) {
    float64x2_t vm = vdupq_n_f64(m);
    for (; i + 2 <= n; i += 2) {
      float64x2_t v = vld1q_f64(s + i);
      if (z) v = vsubq_f64(v, vld1q_f64(z + i));
      vm = vmaxq_f64(vm, v);
    }
    m = vgetq_lane_f64(vm, 0);
    const double m1 = vgetq_lane_f64(vm, 1);
    if (m1 > m) m = m1;
  }
  for (; i < n; ++i) {
    const double v = z ? s[i] - z[i] : s[i];
    if (v > m) m = v;
  }
  return m;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
  double total = vgetq_lane_f64(acc, 0) + vgetq_lane_f64(acc, 1);
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

}  // namespace

const Kernels& neon_kernels() {
  static const Kernels k = {exp_v_neon, exp_shift_sum_neon, max_minus_neon,
                            axpy_neon, dot_neon, "neon"};
  return k;
}

}  // namespace nuclr::kern

#endif  // aarch64
