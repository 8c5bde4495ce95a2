#ifndef NUCLR_QUADRATURE_HPP
#define NUCLR_QUADRATURE_HPP

#include <cstddef>
#include <vector>

namespace nuclr::quad {

struct Rule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;  // sum to 2
};

// Gauss-Legendre rule of the given order, exact for polynomials up to
// degree 2n-1. Nodes found by Newton iteration on P_n; cached per order.
const Rule& gauss_legendre(std::size_t n);

template <typename F>
double integrate_1d(F&& f, double a, double b, std::size_t order = 64) {
  const Rule& r = gauss_legendre(order);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double acc = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i)
    acc += r.weights[i] * f(mid + half * r.nodes[i]);
  return half * acc;
}

template <typename F>
double integrate_2d(F&& f, double ax, double bx, double ay, double by,
                    std::size_t order = 64) {
  const Rule& r = gauss_legendre(order);
  const double hx = 0.5 * (bx - ax), mx = 0.5 * (ax + bx);
  const double hy = 0.5 * (by - ay), my = 0.5 * (ay + by);
  double acc = 0.0;
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    const double x = mx + hx * r.nodes[i];
    double row = 0.0;
    for (std::size_t j = 0; j < r.nodes.size(); ++j)
      row += r.weights[j] * f(x, my + hy * r.nodes[j]);
    acc += r.weights[i] * row;
  }
  return hx * hy * acc;
}

}  // namespace nuclr::quad

#endif  // NUCLR_QUADRATURE_HPP
