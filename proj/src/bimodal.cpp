#include "nuclr/bimodal.hpp"

#include <cmath>

namespace nuclr::bimodal {

BimodalWorld make_bimodal_world(std::uint64_t seed, int d_latent, int d_obs,
                                double noise) {
  if (d_latent < 1 || d_obs < 1) throw ConfigError("bad bimodal dimensions");
  BimodalWorld w;
  w.d_latent = d_latent;
  w.d_obs = d_obs;
  w.noise = noise;
  CounterRng rng(seed, 1);
  w.a.resize(static_cast<std::size_t>(d_obs) * d_latent);
  w.b.resize(w.a.size());
  for (double& v : w.a) v = rng.normal();
  for (double& v : w.b) v = rng.normal();
  return w;
}

PairedDataset sample_bimodal(const BimodalWorld& world, std::size_t n,
                             double tau, CounterRng& rng) {
  if (n < 1) throw ConfigError("dataset size must be >= 1");
  PairedDataset ds;
  ds.n = n;
  ds.dx = ds.dy = world.d_obs;
  ds.tau = tau;
  ds.x.resize(n * world.d_obs);
  ds.y.resize(n * world.d_obs);
  std::vector<double> z(world.d_latent);
  for (std::size_t i = 0; i < n; ++i) {
    double zn = 0.0;
    for (int d = 0; d < world.d_latent; ++d) {
      z[d] = rng.normal();
      zn += z[d] * z[d];
    }
    zn = std::sqrt(zn);
    for (int d = 0; d < world.d_latent; ++d) z[d] /= zn;
    for (int r = 0; r < world.d_obs; ++r) {
      double acc = 0.0;
      const double* row =
          world.a.data() + static_cast<std::size_t>(r) * world.d_latent;
      for (int d = 0; d < world.d_latent; ++d) acc += row[d] * z[d];
      ds.x[i * world.d_obs + r] = acc + world.noise * rng.normal();
    }
    for (int r = 0; r < world.d_obs; ++r) {
      double acc = 0.0;
      const double* row =
          world.b.data() + static_cast<std::size_t>(r) * world.d_latent;
      for (int d = 0; d < world.d_latent; ++d) acc += row[d] * z[d];
      ds.y[i * world.d_obs + r] = acc + world.noise * rng.normal();
    }
  }
  return ds;
}

}  // namespace nuclr::bimodal
