#include "nuclr/world.hpp"

#include <cmath>

#include "nuclr/kernels.hpp"
#include "nuclr/quadrature.hpp"

namespace nuclr::world {

bool in_anchor_domain(const Vec2& x) {
  return x[0] >= -1.0 - kDomainEps && x[0] <= 1.0 + kDomainEps &&
         x[1] >= -kDomainEps && x[1] <= 1.0 + kDomainEps &&
         x[0] * x[0] + x[1] * x[1] <= 1.0 + kDomainEps;
}

bool in_target_domain(const Vec2& y) {
  return y[0] >= -kDomainEps && y[0] <= 1.0 + kDomainEps &&
         y[1] >= -kDomainEps && y[1] <= 1.0 + kDomainEps;
}

double axis_partition(double a, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("tau must be positive");
  if (std::abs(a) < 1e-12) return 1.0 + a / (2.0 * tau);
  return tau * std::expm1(a / tau) / a;
}

double partition_function(const Vec2& x, double tau) {
  return axis_partition(x[0], tau) * axis_partition(x[1], tau);
}

double log_conditional_density(const Vec2& y, const Vec2& x, double tau) {
  if (!in_target_domain(y)) throw std::domain_error("y outside unit square");
  if (!in_anchor_domain(x)) throw std::domain_error("x outside half disk");
  return dot2(x, y) / tau - std::log(partition_function(x, tau));
}

double conditional_density(const Vec2& y, const Vec2& x, double tau) {
  return std::exp(log_conditional_density(y, x, tau));
}

double envelope_max(const Vec2& x) {
  // y ranges over [0,1]^2 and x2 >= 0 on the half disk, so the maximizer
  // is y = (x1 > 0 ? 1 : 0, 1).
  return (x[0] > 0.0 ? x[0] : 0.0) + x[1];
}

Vec2 sample_anchor(CounterRng& rng, std::size_t* n_proposals) {
  for (std::size_t k = 0; k < kProposalCap; ++k) {
    const Vec2 p = {rng.uniform(-1.0, 1.0), rng.uniform()};
    if (n_proposals) ++*n_proposals;
    if (p[0] * p[0] + p[1] * p[1] <= 1.0) return p;
  }
  throw std::runtime_error("anchor rejection cap exceeded; RNG broken?");
}

Vec2 sample_conditional(const Vec2& x, double tau, CounterRng& rng,
                        std::size_t* n_proposals) {
  if (tau <= 0.0) throw std::invalid_argument("tau must be positive");
  if (!in_anchor_domain(x)) throw std::domain_error("x outside half disk");
  const double m = envelope_max(x);
  for (std::size_t k = 0; k < kProposalCap; ++k) {
    const Vec2 y = {rng.uniform(), rng.uniform()};
    if (n_proposals) ++*n_proposals;
    const double ratio = std::exp((dot2(x, y) - m) / tau);
    if (ratio > 1.0 + 1e-12)
      throw std::runtime_error("rejection envelope violated");
    if (rng.uniform() < ratio) return y;
  }
  throw std::runtime_error("conditional rejection cap exceeded");
}

PairedDataset make_dataset(std::size_t n, double tau, CounterRng& rng) {
  if (n < 1) throw ConfigError("dataset size must be >= 1");
  if (tau <= 0.0) throw ConfigError("tau must be positive");
  PairedDataset ds;
  ds.n = n;
  ds.dx = ds.dy = 2;
  ds.tau = tau;
  ds.x.resize(2 * n);
  ds.y.resize(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 xi = sample_anchor(rng);
    const Vec2 yi = sample_conditional(xi, tau, rng);
    ds.x[2 * i] = xi[0];
    ds.x[2 * i + 1] = xi[1];
    ds.y[2 * i] = yi[0];
    ds.y[2 * i + 1] = yi[1];
  }
  return ds;
}

std::vector<double> true_popularity(const PairedDataset& ds) {
  if (ds.dx != 2 || ds.dy != 2)
    throw std::invalid_argument("popularity needs the 2-D world");
  const std::size_t n = ds.n;
  const auto& k = kern::active();
  std::vector<double> q(n, 0.0), sims(n), terms(n);
  // q accumulates anchor by anchor (fixed order): q_j += p(y_j | x_{j'}).
  for (std::size_t jp = 0; jp < n; ++jp) {
    const Vec2 a = ds.anchor2(jp);
    for (std::size_t j = 0; j < n; ++j)
      sims[j] = a[0] * ds.y[2 * j] + a[1] * ds.y[2 * j + 1];
    k.exp_shift_sum(sims.data(), nullptr, 0.0, 1.0 / ds.tau, terms.data(), n);
    k.axpy(1.0 / partition_function(a, ds.tau), terms.data(), q.data(), n);
  }
  return q;
}

double estimate_true_risk_fn(
    const std::function<double(const Vec2&, const Vec2&)>& value,
    const std::function<double(const Vec2&)>& log_partition, double tau,
    std::size_t n_pairs, CounterRng& rng) {
  if (n_pairs < 1) throw ConfigError("need at least one pair");
  double acc = 0.0;
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const Vec2 x = sample_anchor(rng);
    const Vec2 y = sample_conditional(x, tau, rng);
    acc += value(x, y) - tau * log_partition(x);
  }
  return -acc / static_cast<double>(n_pairs);
}

double estimate_true_risk(const SimilarityModel& model, double tau,
                          std::size_t n_pairs, CounterRng& rng) {
  if (std::holds_alternative<BilinearModel>(model)) {
    return estimate_true_risk_fn(
        [](const Vec2& x, const Vec2& y) { return dot2(x, y); },
        [tau](const Vec2& x) { return std::log(partition_function(x, tau)); },
        tau, n_pairs, rng);
  }
  return estimate_true_risk_fn(
      [&](const Vec2& x, const Vec2& y) {
        return similarity(model, std::span<const double>(x),
                          std::span<const double>(y));
      },
      [&](const Vec2& x) {
        const double z = quad::integrate_2d(
            [&](double y1, double y2) {
              const Vec2 y = {y1, y2};
              return std::exp(similarity(model, std::span<const double>(x),
                                         std::span<const double>(y)) /
                              tau);
            },
            0.0, 1.0, 0.0, 1.0, 48);
        return std::log(z);
      },
      tau, n_pairs, rng);
}

double exact_mle_risk(const PairedDataset& ds) {
  if (ds.dx != 2 || ds.dy != 2)
    throw std::invalid_argument("exact risk needs the 2-D world");
  double acc = 0.0;
  for (std::size_t i = 0; i < ds.n; ++i) {
    const Vec2 x = ds.anchor2(i);
    acc += dot2(x, ds.target2(i)) -
           ds.tau * std::log(partition_function(x, ds.tau));
  }
  return -acc / static_cast<double>(ds.n);
}

}  // namespace nuclr::world
