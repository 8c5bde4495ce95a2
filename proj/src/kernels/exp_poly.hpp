#ifndef NUCLR_KERNELS_EXP_POLY_HPP
#define NUCLR_KERNELS_EXP_POLY_HPP

#include <cstdint>
#include <cstring>
#include <limits>

// Shared coefficients for the rational exp() approximation used by the SIMD
// kernels (Cephes expl scheme): with r reduced to [-ln2/2, ln2/2],
//
//   exp(r) ~= 1 + 2 p / (q - p),  p = r * P(r^2),  q = Q(r^2),
//
// then scaled by 2^k. Accurate to ~2 ulp over the full finite range.

namespace nuclr::kern::detail {

inline constexpr double kExpP0 = 1.26177193074810590878e-4;
inline constexpr double kExpP1 = 3.02994407707441961300e-2;
inline constexpr double kExpP2 = 9.99999999999999999910e-1;
inline constexpr double kExpQ0 = 3.00198505138664455042e-6;
inline constexpr double kExpQ1 = 2.52448340349684104192e-3;
inline constexpr double kExpQ2 = 2.27265548208155028766e-1;
inline constexpr double kExpQ3 = 2.00000000000000000005e0;

inline constexpr double kLog2E = 1.4426950408889634073599;
inline constexpr double kLn2Hi = 6.93145751953125e-1;
inline constexpr double kLn2Lo = 1.42860682030941723212e-6;

// Saturation bounds: below kExpLo the result underflows to 0, above kExpHi
// it overflows to +inf. Chosen inside [-708.4, 709.8] so the 2^k bit trick
// never leaves the normal exponent range.
inline constexpr double kExpLo = -708.0;
inline constexpr double kExpHi = 708.0;

// Scalar version of the same polynomial, used for vector-loop tails so a
// whole array goes through one approximation.
inline double exp_poly_scalar(double x) {
  if (x < kExpLo) return 0.0;
  if (x > kExpHi) return std::numeric_limits<double>::infinity();
  double k = x * kLog2E;
  k = (k >= 0.0) ? static_cast<double>(static_cast<long long>(k + 0.5))
                 : static_cast<double>(static_cast<long long>(k - 0.5));
  const double r = (x - k * kLn2Hi) - k * kLn2Lo;
  const double rr = r * r;
  const double p = r * ((kExpP0 * rr + kExpP1) * rr + kExpP2);
  const double q = ((kExpQ0 * rr + kExpQ1) * rr + kExpQ2) * rr + kExpQ3;
  double e = 1.0 + 2.0 * p / (q - p);
  // e *= 2^k via the exponent field; |k| <= 1022 after the range clamp.
  const std::int64_t bits = (static_cast<std::int64_t>(k) + 1023) << 52;
  double scale;
  std::memcpy(&scale, &bits, sizeof scale);
  return e * scale;
}

}  // namespace nuclr::kern::detail

#endif  // NUCLR_KERNELS_EXP_POLY_HPP
