#ifndef NUCLR_WORLD_HPP
#define NUCLR_WORLD_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "nuclr/common.hpp"
#include "nuclr/dataset.hpp"
#include "nuclr/models.hpp"
#include "nuclr/rng.hpp"

namespace nuclr::world {

// Analytically tractable 2-D world: anchors live on the upper half of the
// unit disk, targets on the unit square, and the conditional law of a
// target given an anchor is
//
//   p(y|x) = exp(x.y / tau) / Z(x),   Z(x) = h(x1, tau) * h(x2, tau),
//   h(a, tau) = tau * (e^{a/tau} - 1) / a   (h(0, tau) = 1),
//
// so partition functions, densities and popularities are all exact.

inline constexpr double kDomainEps = 1e-12;
inline constexpr std::size_t kProposalCap = 1000000;

bool in_anchor_domain(const Vec2& x);
bool in_target_domain(const Vec2& y);

// One factor of the separable partition function; switches to the
// first-order expansion 1 + a/(2 tau) below |a| = 1e-12.
double axis_partition(double a, double tau);

double partition_function(const Vec2& x, double tau);
double conditional_density(const Vec2& y, const Vec2& x, double tau);
double log_conditional_density(const Vec2& y, const Vec2& x, double tau);

// max over the unit square of x.y; the rejection envelope exponent.
double envelope_max(const Vec2& x);

// Uniform draw from the half disk by rejection from [-1,1]x[0,1].
// n_proposals, when given, accumulates the number of proposals made.
Vec2 sample_anchor(CounterRng& rng, std::size_t* n_proposals = nullptr);

// Exact draw from p(.|x): propose uniform on the square, accept with
// probability exp((x.y - envelope_max(x)) / tau). The acceptance rate is
// Z(x) exp(-envelope_max(x)/tau) >= exp(-sqrt(2)/tau) -- about 8.5e-4 at
// tau = 0.2 for the most lopsided anchors, i.e. ~1.2e3 proposals per draw
// worst case, far under the 1e6 cap. Hitting the cap signals a broken
// envelope, not bad luck.
Vec2 sample_conditional(const Vec2& x, double tau, CounterRng& rng,
                        std::size_t* n_proposals = nullptr);

// n anchors uniform on X, each y_i drawn from p(.|x_i).
PairedDataset make_dataset(std::size_t n, double tau, CounterRng& rng);

// Popularity q^(j) = sum_{j'} p(y_j | x_{j'}), exact partition functions.
std::vector<double> true_popularity(const PairedDataset& ds);

// Monte Carlo estimate of the expected risk -E[tau log p_model(y|x)] on N
// fresh pairs from the world. log_partition(x) must return log of the
// model's partition function at anchor x.
double estimate_true_risk_fn(
    const std::function<double(const Vec2&, const Vec2&)>& value,
    const std::function<double(const Vec2&)>& log_partition, double tau,
    std::size_t n_pairs, CounterRng& rng);

// Dispatch on model kind: exact Z for the bilinear ground truth, 2-D
// Gauss-Legendre otherwise.
double estimate_true_risk(const SimilarityModel& model, double tau,
                          std::size_t n_pairs, CounterRng& rng);

// Empirical MLE risk of the ground-truth model with exact Z:
// -(1/n) sum_i (x_i.y_i - tau log Z(x_i)).
double exact_mle_risk(const PairedDataset& ds);

}  // namespace nuclr::world

#endif  // NUCLR_WORLD_HPP
