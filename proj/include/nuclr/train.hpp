#ifndef NUCLR_TRAIN_HPP
#define NUCLR_TRAIN_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nuclr/common.hpp"
#include "nuclr/dataset.hpp"
#include "nuclr/models.hpp"
#include "nuclr/rng.hpp"

namespace nuclr::train {

// Which conditional the loss models: Forward contrasts targets y_j given
// anchor x_i, Backward contrasts anchors x_j given target y_i. Symmetric
// training keeps one zeta/u/xi track per direction and sums both losses.
enum class Direction { Forward, Backward };

enum class Schedule { Constant, Cosine };
enum class Mode { Unidirectional, Symmetric };

struct NuclrConfig {
  double tau = 0.2;
  std::size_t batch = 64;
  std::size_t epochs = 30;
  double gamma = 0.8;  // moving-average weight on fresh phi estimates
  double lr_w = 0.05;
  double lr_zeta = 0.02;
  double momentum_w = 0.9;
  double momentum_zeta = 0.9;
  double zeta0 = 0.0;
  std::size_t freeze_epochs = 5;  // zeta and xi held fixed at the start
  Schedule schedule = Schedule::Cosine;
  Mode mode = Mode::Unidirectional;
  bool sogclr = false;      // zeta pinned to 0 and xi to 0 throughout
  bool adaptive_w = false;  // Adam-style per-coordinate steps for w
  std::size_t full_metrics_max_n = 8192;

  void validate(std::size_t n) const;
};

// Per-direction auxiliary state: popularity log-weights zeta, the phi
// moving averages u (with first-touch tracking), zeta momentum, and the
// running max xi of |zeta|_inf.
struct DirectionState {
  std::vector<double> zeta;
  std::vector<double> u;
  std::vector<std::uint8_t> u_touched;
  std::vector<double> v_zeta;
  double xi = 0.0;
};

struct NuclrState {
  LinearCosineModel model;
  DirectionState fwd;
  DirectionState bwd;  // used only in symmetric mode
  std::vector<double> v_w;
  std::vector<double> adam_m, adam_v;  // adaptive variant
  std::uint64_t step = 0;
};

NuclrState make_state(LinearCosineModel model, std::size_t n,
                      const NuclrConfig& cfg);

double pair_sim(const SimilarityModel& model, const PairedDataset& ds,
                Direction dir, std::size_t i, std::size_t j);

// phi^_i = ((n-1)/(B-1)) sum_{j in batch, j != i}
//              exp((E_ij - E_ii - zeta_j)/tau),  B >= 2.
double minibatch_phi(const SimilarityModel& model, const PairedDataset& ds,
                     std::span<const double> zeta, double tau, std::size_t i,
                     std::span<const std::size_t> batch,
                     Direction dir = Direction::Forward);

// EMA update of u on batch coordinates; entries outside the batch keep
// their value, and the first touch of a coordinate seeds the average.
void update_u(DirectionState& dir, std::span<const std::size_t> batch,
              std::span<const double> phi_hats, double gamma);

// Stochastic zeta gradient (one value per batch coordinate, batch order):
//   G(zeta_j) = (1/B) sum_{i in batch} tau/(eps_i + u_i)
//                   d/dzeta_j (eps_i + phi^_i)  +  1/n,
// with eps_i = exp(-zeta_i/tau). Requires u updated for this batch.
std::vector<double> grad_zeta(const SimilarityModel& model,
                              const PairedDataset& ds,
                              const DirectionState& dir_state, double tau,
                              std::span<const std::size_t> batch,
                              Direction dir = Direction::Forward);

// Stochastic w gradient
//   G(w) = (1/B) sum_{i in batch} tau/(eps~ + u_i) grad_w phi^_i,
// where the positive-pair strength eps~ = exp(-xi/tau) uses the running
// max xi instead of exp(-zeta_i/tau). Accumulates into grad.
void grad_w(const SimilarityModel& model, const PairedDataset& ds,
            const DirectionState& dir_state, double tau,
            std::span<const std::size_t> batch, std::span<double> grad,
            Direction dir = Direction::Forward);

// One optimizer step: phi estimates, u update, zeta gradient + update
// (skipped while frozen), w gradient + update, xi update. Deterministic
// given the batch.
void nuclr_step(NuclrState& st, std::span<const std::size_t> batch,
                const PairedDataset& ds, const NuclrConfig& cfg,
                std::uint64_t total_steps, bool freeze);

// Full-batch objectives at the current iterate, for diagnostics:
//   psi = (1/n) sum_i tau log sum_j exp((E_ij - E_ii - zeta_j)/tau)
//   phi = psi + mean(zeta)
double full_psi(const SimilarityModel& model, const PairedDataset& ds,
                std::span<const double> zeta, double tau,
                Direction dir = Direction::Forward);
double full_phi(const SimilarityModel& model, const PairedDataset& ds,
                std::span<const double> zeta, double tau,
                Direction dir = Direction::Forward);

struct EpochMetrics {
  std::size_t epoch = 0;
  double phi_full = 0.0;
  double psi_full = 0.0;
  double recall_at_1 = 0.0;
  double zeta_min = 0.0, zeta_max = 0.0;
  double xi = 0.0;
};

struct TrainResult {
  LinearCosineModel model;
  NuclrState state;
  std::vector<EpochMetrics> metrics;
};

// Shuffled minibatches for cfg.epochs epochs (short final batches are
// dropped); metrics recorded once per epoch on the forward track.
TrainResult train(const PairedDataset& ds, LinearCosineModel model,
                  const NuclrConfig& cfg, CounterRng& rng,
                  const PairedDataset* eval_ds = nullptr);

double recall_at_1(const SimilarityModel& model, const PairedDataset& ds);

// 1-NN zero-shot rule: argmax_k E(x, y_k), ties to the lowest index.
std::size_t zero_shot_classify(const SimilarityModel& model,
                               std::span<const double> x,
                               const std::vector<std::vector<double>>& protos);

std::string metrics_to_csv(const std::vector<EpochMetrics>& rows,
                           std::uint64_t config_hash);
void write_metrics_csv(const std::string& path,
                       const std::vector<EpochMetrics>& rows,
                       std::uint64_t config_hash);
void write_state_json(const std::string& path, const NuclrState& st,
                      Mode mode);

}  // namespace nuclr::train

#endif  // NUCLR_TRAIN_HPP
