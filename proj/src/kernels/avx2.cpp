#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#include <cstdint>
#include <limits>

#include "exp_poly.hpp"
#include "nuclr/kernels.hpp"

namespace nuclr::kern {
namespace {

using namespace detail;

inline __m256d exp4(__m256d x) {
  const __m256d lo = _mm256_set1_pd(kExpLo);
  const __m256d hi = _mm256_set1_pd(kExpHi);
  const __m256d under = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
  const __m256d over = _mm256_cmp_pd(x, hi, _CMP_GT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

  const __m256d k =
      _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kLog2E)),
                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(k, _mm256_set1_pd(kLn2Hi), x);
  r = _mm256_fnmadd_pd(k, _mm256_set1_pd(kLn2Lo), r);

  const __m256d rr = _mm256_mul_pd(r, r);
  __m256d p = _mm256_set1_pd(kExpP0);
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(kExpP1));
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(kExpP2));
  p = _mm256_mul_pd(p, r);
  __m256d q = _mm256_set1_pd(kExpQ0);
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(kExpQ1));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(kExpQ2));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(kExpQ3));
  __m256d e = _mm256_div_pd(_mm256_mul_pd(_mm256_set1_pd(2.0), p),
                            _mm256_sub_pd(q, p));
  e = _mm256_add_pd(e, _mm256_set1_pd(1.0));

  // 2^k through the exponent bits.
  const __m128i k32 = _mm256_cvtpd_epi32(k);
  const __m256i k64 = _mm256_cvtepi32_epi64(k32);
  const __m256i bits =
      _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52);
  e = _mm256_mul_pd(e, _mm256_castsi256_pd(bits));

  e = _mm256_blendv_pd(e, _mm256_setzero_pd(), under);
  e = _mm256_blendv_pd(
      e, _mm256_set1_pd(std::numeric_limits<double>::infinity()), over);
  return e;
}

void exp_v_avx2(const double* x, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, exp4(_mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = exp_poly_scalar(x[i]);
}

double exp_shift_sum_avx2(const double* s, const double* z, double shift,
                          double inv_tau, double* out, std::size_t n) {
  const __m256d vshift = _mm256_set1_pd(shift);
  const __m256d vinv = _mm256_set1_pd(inv_tau);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d a = _mm256_loadu_pd(s + i);
    if (z) a = _mm256_sub_pd(a, _mm256_loadu_pd(z + i));
    a = _mm256_mul_pd(_mm256_sub_pd(a, vshift), vinv);
    const __m256d e = exp4(a);
    if (out) _mm256_storeu_pd(out + i, e);
    acc = _mm256_add_pd(acc, e);
  }
  const __m128d lo128 = _mm256_castpd256_pd128(acc);
  const __m128d hi128 = _mm256_extractf128_pd(acc, 1);
  const __m128d sum2 = _mm_add_pd(lo128, hi128);
  double total = _mm_cvtsd_f64(_mm_add_sd(sum2, _mm_unpackhi_pd(sum2, sum2)));
  for (; i < n; ++i) {
    const double a = ((z ? s[i] - z[i] : s[i]) - shift) * inv_tau;
    const double e = exp_poly_scalar(a);
    if (out) out[i] = e;
    total += e;
  }
  return total;
}

double max_minus_avx2(const double* s, const double* z, std::size_t n) {
  std::size_t i = 0;
  double m = -std::numeric_limits<double>::infinity();
  if (n >= 4) {
    __m256d vm = _mm256_set1_pd(m);
    for (; i + 4 <= n; i += 4) {
      __m256d v = _mm256_loadu_pd(s + i);
      if (z) v = _mm256_sub_pd(v, _mm256_loadu_pd(z + i));
      vm = _mm256_max_pd(vm, v);
    }
    const __m128d a = _mm256_castpd256_pd128(vm);
    const __m128d b = _mm256_extractf128_pd(vm, 1);
    const __m128d c = _mm_max_pd(a, b);
    m = _mm_cvtsd_f64(_mm_max_sd(c, _mm_unpackhi_pd(c, c)));
  }
  for (; i < n; ++i) {
    const double v = z ? s[i] - z[i] : s[i];
    if (v > m) m = v;
  }
  return m;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v =
        _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    _mm256_storeu_pd(y + i, v);
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  const __m128d lo = _mm256_castpd256_pd128(acc);
  const __m128d hi = _mm256_extractf128_pd(acc, 1);
  const __m128d s2 = _mm_add_pd(lo, hi);
  double total = _mm_cvtsd_f64(_mm_add_sd(s2, _mm_unpackhi_pd(s2, s2)));
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

}  // namespace

const Kernels& avx2_kernels() {
  static const Kernels k = {exp_v_avx2, exp_shift_sum_avx2, max_minus_avx2,
                            axpy_avx2, dot_avx2, "avx2"};
  return k;
}

}  // namespace nuclr::kern

#endif  // x86
