#ifndef NUCLR_TEST_HELPERS_HPP
#define NUCLR_TEST_HELPERS_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "nuclr/common.hpp"
#include "nuclr/quadrature.hpp"
#include "nuclr/rng.hpp"

namespace testutil {

// Central finite differences of a scalar function of a parameter vector.
inline std::vector<double> fd_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> params, double h = 1e-6) {
  std::vector<double> g(params.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    const double orig = params[p];
    params[p] = orig + h;
    const double fp = f(params);
    params[p] = orig - h;
    const double fm = f(params);
    params[p] = orig;
    g[p] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// |a - b|_inf / max(|b|_inf, floor)
inline double rel_inf_error(const std::vector<double>& a,
                            const std::vector<double>& b,
                            double floor = 1e-12) {
  double diff = 0.0, scale = floor;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / scale;
}

// Pearson chi-square statistic of observed counts against expected cell
// probabilities (counts and probs same length; probs sum to ~1).
inline double chi_square_stat(const std::vector<std::size_t>& counts,
                              const std::vector<double>& probs,
                              std::size_t total) {
  double stat = 0.0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const double expected = probs[c] * static_cast<double>(total);
    const double d = static_cast<double>(counts[c]) - expected;
    stat += d * d / expected;
  }
  return stat;
}

// chi-square(15) upper 1% point, for 4x4 grids.
inline constexpr double kChi2Df15Alpha01 = 30.5779141668925;

inline double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v) {
  const double m = sample_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace testutil

#endif  // NUCLR_TEST_HELPERS_HPP
