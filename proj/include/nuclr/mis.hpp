#ifndef NUCLR_MIS_HPP
#define NUCLR_MIS_HPP

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nuclr/common.hpp"
#include "nuclr/dataset.hpp"
#include "nuclr/models.hpp"

namespace nuclr::mis {

// Simplex weightings for combining samples from the n proposal
// distributions p(.|x_j). For every y the induced weights are nonnegative
// and sum to one over j.
enum class WeightKind { BalanceHeuristic, Uniform, SingleDistribution };

struct WeightingScheme {
  WeightKind kind = WeightKind::BalanceHeuristic;
  std::size_t index = 0;  // proposal picked by SingleDistribution
  std::string name() const;
};

using DensityFn = std::function<double(const Vec2& y, std::size_t j)>;

// omega^{(j)}(y) for j < n, written into out.
void weights(const WeightingScheme& scheme, const Vec2& y, std::size_t n,
             const DensityFn& density, std::span<double> out);

// Plug-in estimate of the partition integral at anchor x:
//   g~ = sum_j exp(E(x, y_j)/tau) / q~^(j),
// computed through shifted exponentials. sims[j] = E(x, y_j) may be given
// directly; otherwise it is evaluated from the model and dataset targets.
double mis_log_estimate_sims(std::span<const double> sims,
                             std::span<const double> qtilde, double tau);
double mis_estimate(const SimilarityModel& model, std::span<const double> x,
                    const PairedDataset& ds, std::span<const double> qtilde,
                    double tau);

// General weighted estimator with a size-m sample from each proposal:
//   g^ = sum_j (1/m) sum_l omega^(j)(y_{j,l}) / p(y_{j,l}|x_j)
//                  * exp(E(x, y_{j,l})/tau),
// samples laid out as samples[j*m + l].
double mis_estimate_weighted(const SimilarityModel& model, const Vec2& x,
                             const std::vector<Vec2>& samples, std::size_t m,
                             std::size_t n_proposals, const DensityFn& density,
                             const WeightingScheme& scheme, double tau);

// MIS empirical risk -(1/n) sum_i tau log( exp(E_ii/tau) / g~_i ).
double empirical_risk(const SimilarityModel& model, const PairedDataset& ds,
                      std::span<const double> qtilde, double tau);

// Global contrastive loss: denominator sums over all j including j = i.
// Identity: empirical_risk with q~ = n c 1 equals gcl_risk - tau log(n c).
double gcl_risk(const SimilarityModel& model, const PairedDataset& ds,
                double tau);

// Popularity-approximation error term
//   (1/n) sum_i sum_j |1/q~^(j) - 1/q^(j)| exp((E_ii - 1)/tau);
// the double sum factors into (sum_i exp((E_ii-1)/tau)/n) * sum_j |.|.
double approximation_error_term(const SimilarityModel& model,
                                const PairedDataset& ds,
                                std::span<const double> qtilde,
                                std::span<const double> q_true, double tau);

// Empirical mean/variance of the weighted estimator over repeated target
// resamples, per scheme and (n, m) cell, against the exact partition value.
struct VarianceStudyConfig {
  std::uint64_t seed = 0;
  double tau = 0.2;
  std::vector<std::pair<std::size_t, std::size_t>> grid = {
      {8, 1}, {32, 1}, {8, 4}};
  std::size_t repeats = 2000;
  std::vector<WeightingScheme> schemes = {
      {WeightKind::BalanceHeuristic, 0},
      {WeightKind::Uniform, 0},
      {WeightKind::SingleDistribution, 0}};
  // Test fixtures may pin the query anchor and the first proposal anchor
  // (e.g. an adversarial pair on opposite ends of the disk).
  std::optional<Vec2> query_anchor;
  std::optional<Vec2> first_proposal_anchor;
};

struct VarianceRow {
  std::string scheme;
  std::size_t n = 0, m = 0, repeats = 0;
  double mean = 0.0, variance = 0.0, exact = 0.0, abs_bias = 0.0;
};

std::vector<VarianceRow> estimator_variance_study(
    const VarianceStudyConfig& cfg);

}  // namespace nuclr::mis

#endif  // NUCLR_MIS_HPP
