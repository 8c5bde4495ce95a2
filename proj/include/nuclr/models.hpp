#ifndef NUCLR_MODELS_HPP
#define NUCLR_MODELS_HPP

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nuclr/common.hpp"
#include "nuclr/rng.hpp"

namespace nuclr {

// Ground truth of the synthetic world: E(x, y) = x.y. Parameter-free.
struct BilinearModel {};

// Two linear encoders with L2 normalization:
//   E(x, y) = < W1 x / |W1 x| , W2 y / |W2 y| >  in [-1, 1].
// Parameters are stored flat, W1 (d_latent x d_x) row-major followed by
// W2 (d_latent x d_y) row-major.
struct LinearCosineModel {
  int d_latent = 0;
  int d_x = 0;
  int d_y = 0;
  double tau = 0.2;  // checkpoint metadata; objectives take tau explicitly
  std::vector<double> params;

  std::size_t w1_size() const {
    return static_cast<std::size_t>(d_latent) * d_x;
  }
  std::size_t w2_size() const {
    return static_cast<std::size_t>(d_latent) * d_y;
  }
  const double* w1() const { return params.data(); }
  const double* w2() const { return params.data() + w1_size(); }
};

using SimilarityModel = std::variant<BilinearModel, LinearCosineModel>;

// Projections shorter than this are treated as degenerate and rejected
// rather than silently renormalized.
inline constexpr double kNormFloor = 1e-8;

// Entries i.i.d. uniform on [-1/sqrt(d_in), 1/sqrt(d_in)].
LinearCosineModel init_linear_cosine(int d_latent, int d_x, int d_y,
                                     double tau, CounterRng& rng);

std::size_t param_count(const SimilarityModel& model);

double similarity(const SimilarityModel& model, std::span<const double> x,
                  std::span<const double> y);

// Exact gradient of similarity() with respect to every parameter, written
// into grad (length param_count). Only defined for parameterized models.
void similarity_grad(const SimilarityModel& model, std::span<const double> x,
                     std::span<const double> y, std::span<double> grad);

// Embedding helpers for the cosine model (normalized projections).
void embed_anchor(const LinearCosineModel& m, std::span<const double> x,
                  std::span<double> out);
void embed_target(const LinearCosineModel& m, std::span<const double> y,
                  std::span<double> out);

// Checkpoint JSON: shape metadata plus the row-major parameter dump at 17
// significant digits.
void save_checkpoint(const std::string& path, const SimilarityModel& model);
SimilarityModel load_checkpoint(const std::string& path);

}  // namespace nuclr

#endif  // NUCLR_MODELS_HPP
