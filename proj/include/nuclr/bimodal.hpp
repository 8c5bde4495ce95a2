#ifndef NUCLR_BIMODAL_HPP
#define NUCLR_BIMODAL_HPP

#include <cstdint>
#include <vector>

#include "nuclr/dataset.hpp"
#include "nuclr/rng.hpp"

namespace nuclr::bimodal {

// Two-view retrieval task for end-to-end training: a latent z uniform on
// the unit sphere in R^d_latent is observed through two fixed random
// linear maps plus isotropic noise,
//
//   x = A z + noise * eps,   y = B z + noise * eps',
//
// and positives share z. Train/eval splits must come from the same world
// (same A, B) for retrieval to be meaningful.
struct BimodalWorld {
  int d_latent = 4;
  int d_obs = 8;
  double noise = 0.05;
  std::vector<double> a;  // d_obs x d_latent, row-major
  std::vector<double> b;
};

BimodalWorld make_bimodal_world(std::uint64_t seed, int d_latent = 4,
                                int d_obs = 8, double noise = 0.05);

PairedDataset sample_bimodal(const BimodalWorld& world, std::size_t n,
                             double tau, CounterRng& rng);

}  // namespace nuclr::bimodal

#endif  // NUCLR_BIMODAL_HPP
