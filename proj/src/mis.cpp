#include "nuclr/mis.hpp"

#include <algorithm>
#include <cmath>

#include "nuclr/kernels.hpp"
#include "nuclr/world.hpp"

namespace nuclr::mis {

namespace {

// Row of similarities E(x, y_j) for all targets of ds.
void sims_row(const SimilarityModel& model, std::span<const double> x,
              const PairedDataset& ds, std::vector<double>& out) {
  out.resize(ds.n);
  if (std::holds_alternative<BilinearModel>(model) && ds.dy == 2 &&
      x.size() == 2) {
    for (std::size_t j = 0; j < ds.n; ++j)
      out[j] = x[0] * ds.y[2 * j] + x[1] * ds.y[2 * j + 1];
    return;
  }
  for (std::size_t j = 0; j < ds.n; ++j)
    out[j] = similarity(model, x, ds.target(j));
}

void check_qtilde(std::span<const double> q) {
  for (double v : q)
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("popularity approximation must be positive");
}

}  // namespace

std::string WeightingScheme::name() const {
  switch (kind) {
    case WeightKind::BalanceHeuristic:
      return "balance";
    case WeightKind::Uniform:
      return "uniform";
    case WeightKind::SingleDistribution:
      return "single:" + std::to_string(index);
  }
  return "?";
}

void weights(const WeightingScheme& scheme, const Vec2& y, std::size_t n,
             const DensityFn& density, std::span<double> out) {
  if (out.size() != n) throw std::invalid_argument("weight buffer size");
  switch (scheme.kind) {
    case WeightKind::Uniform: {
      const double w = 1.0 / static_cast<double>(n);
      std::fill(out.begin(), out.end(), w);
      return;
    }
    case WeightKind::SingleDistribution: {
      if (scheme.index >= n)
        throw std::invalid_argument("single-distribution index out of range");
      std::fill(out.begin(), out.end(), 0.0);
      out[scheme.index] = 1.0;
      return;
    }
    case WeightKind::BalanceHeuristic: {
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        out[j] = density(y, j);
        total += out[j];
      }
      if (!(total > 0.0))
        throw std::domain_error("balance heuristic at a zero-density point");
      for (std::size_t j = 0; j < n; ++j) out[j] /= total;
      return;
    }
  }
}

double mis_log_estimate_sims(std::span<const double> sims,
                             std::span<const double> qtilde, double tau) {
  if (sims.size() != qtilde.size())
    throw std::invalid_argument("sims/qtilde length mismatch");
  check_qtilde(qtilde);
  const std::size_t n = sims.size();
  // With zq_j = tau log q~^(j), the estimate is sum_j exp((s_j - zq_j)/tau);
  // shift by the max exponent before summing.
  std::vector<double> zq(n);
  for (std::size_t j = 0; j < n; ++j) zq[j] = tau * std::log(qtilde[j]);
  const auto& k = kern::active();
  const double m = k.max_minus(sims.data(), zq.data(), n);
  const double s =
      k.exp_shift_sum(sims.data(), zq.data(), m, 1.0 / tau, nullptr, n);
  return m / tau + std::log(s);
}

double mis_estimate(const SimilarityModel& model, std::span<const double> x,
                    const PairedDataset& ds, std::span<const double> qtilde,
                    double tau) {
  std::vector<double> sims;
  sims_row(model, x, ds, sims);
  return std::exp(mis_log_estimate_sims(sims, qtilde, tau));
}

double mis_estimate_weighted(const SimilarityModel& model, const Vec2& x,
                             const std::vector<Vec2>& samples, std::size_t m,
                             std::size_t n_proposals, const DensityFn& density,
                             const WeightingScheme& scheme, double tau) {
  if (m < 1) throw std::invalid_argument("need m >= 1 samples per proposal");
  if (samples.size() != n_proposals * m)
    throw std::invalid_argument("samples must hold n*m points");
  std::vector<double> w(n_proposals);
  const std::span<const double> xs(x);
  double acc = 0.0;
  for (std::size_t j = 0; j < n_proposals; ++j) {
    double inner = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
      const Vec2& y = samples[j * m + l];
      weights(scheme, y, n_proposals, density, w);
      if (w[j] == 0.0) continue;
      const double pj = density(y, j);
      if (!(pj > 0.0))
        throw std::domain_error(
            "sample has zero density under its own proposal");
      inner += w[j] / pj * std::exp(similarity(model, xs, y) / tau);
    }
    acc += inner / static_cast<double>(m);
  }
  return acc;
}

double empirical_risk(const SimilarityModel& model, const PairedDataset& ds,
                      std::span<const double> qtilde, double tau) {
  if (qtilde.size() != ds.n)
    throw std::invalid_argument("qtilde length must equal n");
  check_qtilde(qtilde);
  const std::size_t n = ds.n;
  std::vector<double> zq(n), sims;
  for (std::size_t j = 0; j < n; ++j) zq[j] = tau * std::log(qtilde[j]);
  const auto& k = kern::active();
  double acc = 0.0, comp = 0.0;  // Kahan
  for (std::size_t i = 0; i < n; ++i) {
    sims_row(model, ds.anchor(i), ds, sims);
    const double m = k.max_minus(sims.data(), zq.data(), n);
    const double s =
        k.exp_shift_sum(sims.data(), zq.data(), m, 1.0 / tau, nullptr, n);
    const double term = -sims[i] + m + tau * std::log(s);
    const double yk = term - comp;
    const double t = acc + yk;
    comp = (t - acc) - yk;
    acc = t;
  }
  return acc / static_cast<double>(n);
}

double gcl_risk(const SimilarityModel& model, const PairedDataset& ds,
                double tau) {
  const std::size_t n = ds.n;
  std::vector<double> sims;
  const auto& k = kern::active();
  double acc = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sims_row(model, ds.anchor(i), ds, sims);
    const double m = k.max_minus(sims.data(), nullptr, n);
    const double s =
        k.exp_shift_sum(sims.data(), nullptr, m, 1.0 / tau, nullptr, n);
    const double term = -sims[i] + m + tau * std::log(s);
    const double yk = term - comp;
    const double t = acc + yk;
    comp = (t - acc) - yk;
    acc = t;
  }
  return acc / static_cast<double>(n);
}

double approximation_error_term(const SimilarityModel& model,
                                const PairedDataset& ds,
                                std::span<const double> qtilde,
                                std::span<const double> q_true, double tau) {
  if (qtilde.size() != ds.n || q_true.size() != ds.n)
    throw std::invalid_argument("popularity vectors must have length n");
  check_qtilde(qtilde);
  check_qtilde(q_true);
  double diag = 0.0;
  for (std::size_t i = 0; i < ds.n; ++i)
    diag += std::exp((similarity(model, ds.anchor(i), ds.target(i)) - 1.0) /
                     tau);
  double inv_gap = 0.0;
  for (std::size_t j = 0; j < ds.n; ++j)
    inv_gap += std::abs(1.0 / qtilde[j] - 1.0 / q_true[j]);
  return diag / static_cast<double>(ds.n) * inv_gap;
}

std::vector<VarianceRow> estimator_variance_study(
    const VarianceStudyConfig& cfg) {
  if (cfg.repeats < 2) throw ConfigError("variance study needs repeats >= 2");
  for (const auto& [n, m] : cfg.grid)
    if (n < 1 || m < 1) throw ConfigError("grid entries must be >= 1");

  CounterRng anchor_rng(cfg.seed, 1);
  const Vec2 query = cfg.query_anchor ? *cfg.query_anchor
                                      : world::sample_anchor(anchor_rng);
  std::size_t max_n = 0;
  for (const auto& [n, m] : cfg.grid) max_n = std::max(max_n, n);

  // Proposal anchors are nested: cell (n, m) uses the first n of one pool,
  // so growing n genuinely adds proposals instead of redrawing the world.
  CounterRng pool_rng(cfg.seed, 2);
  std::vector<Vec2> anchors(max_n);
  for (std::size_t j = 0; j < max_n; ++j)
    anchors[j] = world::sample_anchor(pool_rng);
  if (cfg.first_proposal_anchor) anchors[0] = *cfg.first_proposal_anchor;

  const double exact = world::partition_function(query, cfg.tau);
  const BilinearModel gt{};
  const DensityFn density = [&](const Vec2& y, std::size_t j) {
    return world::conditional_density(y, anchors[j], cfg.tau);
  };

  std::vector<VarianceRow> rows;
  for (std::size_t cell = 0; cell < cfg.grid.size(); ++cell) {
    const auto [n, m] = cfg.grid[cell];
    std::vector<double> sums(cfg.schemes.size(), 0.0);
    std::vector<double> sqsums(cfg.schemes.size(), 0.0);
    std::vector<Vec2> samples(n * m);
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
      CounterRng rng(cfg.seed, ((cell + 1) << 32) | r);
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t l = 0; l < m; ++l)
          samples[j * m + l] =
              world::sample_conditional(anchors[j], cfg.tau, rng);
      for (std::size_t s = 0; s < cfg.schemes.size(); ++s) {
        const double g = mis_estimate_weighted(gt, query, samples, m, n,
                                               density, cfg.schemes[s],
                                               cfg.tau);
        sums[s] += g;
        sqsums[s] += g * g;
      }
    }
    const double R = static_cast<double>(cfg.repeats);
    for (std::size_t s = 0; s < cfg.schemes.size(); ++s) {
      VarianceRow row;
      row.scheme = cfg.schemes[s].name();
      row.n = n;
      row.m = m;
      row.repeats = cfg.repeats;
      row.mean = sums[s] / R;
      row.variance = (sqsums[s] - R * row.mean * row.mean) / (R - 1.0);
      row.exact = exact;
      row.abs_bias = std::abs(row.mean - exact);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace nuclr::mis
