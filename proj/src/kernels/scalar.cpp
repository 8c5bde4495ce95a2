#include "nuclr/kernels.hpp"

#include <cmath>

namespace nuclr::kern {
namespace {

void exp_v_scalar(const double* x, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(x[i]);
}

double exp_shift_sum_scalar(const double* s, const double* z, double shift,
                            double inv_tau, double* out, std::size_t n) {
  double acc = 0.0;
  if (z) {
    for (std::size_t i = 0; i < n; ++i) {
      const double t = std::exp((s[i] - z[i] - shift) * inv_tau);
      if (out) out[i] = t;
      acc += t;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const double t = std::exp((s[i] - shift) * inv_tau);
      if (out) out[i] = t;
      acc += t;
    }
  }
  return acc;
}

double max_minus_scalar(const double* s, const double* z, std::size_t n) {
  double m = z ? s[0] - z[0] : s[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double v = z ? s[i] - z[i] : s[i];
    if (v > m) m = v;
  }
  return m;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

const Kernels& scalar_kernels() {
  static const Kernels k = {exp_v_scalar, exp_shift_sum_scalar,
                            max_minus_scalar, axpy_scalar, dot_scalar,
                            "scalar"};
  return k;
}

}  // namespace nuclr::kern
