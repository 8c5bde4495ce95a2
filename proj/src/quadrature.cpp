#include "nuclr/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace nuclr::quad {

namespace {

Rule build(std::size_t n) {
  if (n == 0) throw std::invalid_argument("quadrature order must be >= 1");
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  const double pi = 3.14159265358979323846;
  for (std::size_t i = 0; i < n; ++i) {
    // Chebyshev-like initial guess for the i-th root of P_n.
    double x = std::cos(pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      // Recurrence: (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 1; k < n; ++k) {
        const double pk = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.nodes[i] = x;
    r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

}  // namespace

const Rule& gauss_legendre(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, Rule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build(n)).first;
  return it->second;
}

}  // namespace nuclr::quad
