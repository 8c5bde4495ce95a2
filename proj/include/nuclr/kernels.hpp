#ifndef NUCLR_KERNELS_HPP
#define NUCLR_KERNELS_HPP

#include <cstddef>
#include <string_view>

namespace nuclr::kern {

// Data-parallel inner loops behind the solver, the risks and the popularity
// sums. Every entry point has a scalar reference implementation; AVX2 (x86)
// and NEON (aarch64) variants are selected once at startup and must agree
// with the reference to ~1e-13 relative (see tests/test_kernels.cpp).
//
// All reductions run in a fixed deterministic order for a given variant, so
// reruns of the same binary on the same machine are bit-identical.
struct Kernels {
  // out[i] = exp(x[i]); saturates to 0 / +inf outside +-708.
  void (*exp_v)(const double* x, double* out, std::size_t n);

  // Returns sum_i exp((s[i] - z[i] - shift) * inv_tau); z may be null
  // (treated as zero) and out may be null (terms are not stored).
  double (*exp_shift_sum)(const double* s, const double* z, double shift,
                          double inv_tau, double* out, std::size_t n);

  // max_i (s[i] - z[i]); z may be null. n >= 1.
  double (*max_minus)(const double* s, const double* z, std::size_t n);

  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);

  double (*dot)(const double* a, const double* b, std::size_t n);

  const char* name;
};

const Kernels& scalar_kernels();

// Active variant: chosen at first use from CPU features, overridable with
// the NUCLR_KERNELS environment variable ("scalar", "avx2", "neon").
const Kernels& active();

// Force a variant by name (tests). Returns false if unavailable.
bool set_active(std::string_view name);

#if defined(__x86_64__) || defined(__i386__)
const Kernels& avx2_kernels();
bool avx2_supported();
#endif
#if defined(__aarch64__)
const Kernels& neon_kernels();
#endif

}  // namespace nuclr::kern

#endif  // NUCLR_KERNELS_HPP
