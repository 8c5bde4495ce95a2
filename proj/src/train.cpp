#include "nuclr/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "nuclr/kernels.hpp"

namespace nuclr::train {

namespace {

double scheduled_lr(double base, Schedule s, std::uint64_t t,
                    std::uint64_t total) {
  if (s == Schedule::Constant || total == 0) return base;
  const double frac = static_cast<double>(t) / static_cast<double>(total);
  return 0.5 * base * (1.0 + std::cos(3.14159265358979323846 * frac));
}

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void check_batch(const PairedDataset& ds, std::span<const std::size_t> batch) {
  if (batch.size() < 2)
    throw std::invalid_argument("batch size must be >= 2");
  for (std::size_t idx : batch)
    if (idx >= ds.n) throw std::invalid_argument("batch index out of range");
}

}  // namespace

void NuclrConfig::validate(std::size_t n) const {
  if (tau <= 0.0) throw ConfigError("tau must be positive");
  if (batch < 2) throw ConfigError("batch size must be >= 2");
  if (batch > n) throw ConfigError("batch size exceeds dataset size");
  if (!(gamma > 0.0) || gamma > 1.0) throw ConfigError("gamma must be in (0,1]");
  if (!(lr_w > 0.0) || !(lr_zeta > 0.0))
    throw ConfigError("learning rates must be positive");
  if (momentum_w < 0.0 || momentum_w >= 1.0 || momentum_zeta < 0.0 ||
      momentum_zeta >= 1.0)
    throw ConfigError("momentum must be in [0,1)");
}

NuclrState make_state(LinearCosineModel model, std::size_t n,
                      const NuclrConfig& cfg) {
  NuclrState st;
  st.model = std::move(model);
  const double z0 = cfg.sogclr ? 0.0 : cfg.zeta0;
  auto init_dir = [&](DirectionState& d) {
    d.zeta.assign(n, z0);
    d.u.assign(n, 0.0);
    d.u_touched.assign(n, 0);
    d.v_zeta.assign(n, 0.0);
    d.xi = z0;  // xi0 = zeta0 so exp(-xi/tau) matches the uniform init
  };
  init_dir(st.fwd);
  if (cfg.mode == Mode::Symmetric) init_dir(st.bwd);
  const std::size_t p = st.model.params.size();
  st.v_w.assign(p, 0.0);
  if (cfg.adaptive_w) {
    st.adam_m.assign(p, 0.0);
    st.adam_v.assign(p, 0.0);
  }
  if (cfg.sogclr) {
    st.fwd.xi = 0.0;
    st.bwd.xi = 0.0;
  }
  return st;
}

double pair_sim(const SimilarityModel& model, const PairedDataset& ds,
                Direction dir, std::size_t i, std::size_t j) {
  return dir == Direction::Forward
             ? similarity(model, ds.anchor(i), ds.target(j))
             : similarity(model, ds.anchor(j), ds.target(i));
}

double minibatch_phi(const SimilarityModel& model, const PairedDataset& ds,
                     std::span<const double> zeta, double tau, std::size_t i,
                     std::span<const std::size_t> batch, Direction dir) {
  check_batch(ds, batch);
  const std::size_t B = batch.size();
  bool found = false;
  for (std::size_t idx : batch) found = found || idx == i;
  if (!found) throw std::invalid_argument("i must be a member of the batch");
  const double e_ii = pair_sim(model, ds, dir, i, i);
  const double scale = static_cast<double>(ds.n - 1) /
                       static_cast<double>(B - 1);
  double s = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t j = batch[b];
    if (j == i) continue;
    s += std::exp((pair_sim(model, ds, dir, i, j) - e_ii - zeta[j]) / tau);
  }
  return scale * s;
}

void update_u(DirectionState& dir, std::span<const std::size_t> batch,
              std::span<const double> phi_hats, double gamma) {
  if (batch.size() != phi_hats.size())
    throw std::invalid_argument("one phi estimate per batch coordinate");
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const std::size_t i = batch[b];
    if (!dir.u_touched[i]) {
      dir.u[i] = phi_hats[b];  // first touch seeds the average
      dir.u_touched[i] = 1;
    } else {
      dir.u[i] = (1.0 - gamma) * dir.u[i] + gamma * phi_hats[b];
    }
  }
}

std::vector<double> grad_zeta(const SimilarityModel& model,
                              const PairedDataset& ds,
                              const DirectionState& dir_state, double tau,
                              std::span<const std::size_t> batch,
                              Direction dir) {
  check_batch(ds, batch);
  const std::size_t B = batch.size();
  const double scale = static_cast<double>(ds.n - 1) /
                       static_cast<double>(B - 1);
  const double inv_B = 1.0 / static_cast<double>(B);
  const double inv_n = 1.0 / static_cast<double>(ds.n);

  // coef_i = 1 / (eps_i + u_i); a[b_i][b_j] = exp((E_ij - E_ii - zeta_j)/tau)
  std::vector<double> coef(B), e_ii(B), a(B * B, 0.0);
  for (std::size_t bi = 0; bi < B; ++bi) {
    const std::size_t i = batch[bi];
    e_ii[bi] = pair_sim(model, ds, dir, i, i);
    const double eps_i = std::exp(-dir_state.zeta[i] / tau);
    coef[bi] = 1.0 / (eps_i + dir_state.u[i]);
    for (std::size_t bj = 0; bj < B; ++bj) {
      const std::size_t j = batch[bj];
      if (j == i) continue;
      a[bi * B + bj] = std::exp(
          (pair_sim(model, ds, dir, i, j) - e_ii[bi] - dir_state.zeta[j]) /
          tau);
    }
  }

  std::vector<double> g(B);
  for (std::size_t bj = 0; bj < B; ++bj) {
    const std::size_t j = batch[bj];
    // d eps_j / d zeta_j contributes only on the diagonal i = j.
    double acc = std::exp(-dir_state.zeta[j] / tau) * coef[bj];
    for (std::size_t bi = 0; bi < B; ++bi) {
      if (bi == bj) continue;
      acc += scale * a[bi * B + bj] * coef[bi];
    }
    g[bj] = -inv_B * acc + inv_n;
  }
  return g;
}

void grad_w(const SimilarityModel& model, const PairedDataset& ds,
            const DirectionState& dir_state, double tau,
            std::span<const std::size_t> batch, std::span<double> grad,
            Direction dir) {
  if (std::holds_alternative<BilinearModel>(model))
    throw std::logic_error("w gradient requires a parameterized model");
  check_batch(ds, batch);
  const std::size_t P = param_count(model);
  if (grad.size() != P) throw std::invalid_argument("gradient buffer size");
  std::fill(grad.begin(), grad.end(), 0.0);

  const std::size_t B = batch.size();
  const double scale = static_cast<double>(ds.n - 1) /
                       static_cast<double>(B - 1);
  const double inv_B = 1.0 / static_cast<double>(B);
  const double eps_pos = std::exp(-dir_state.xi / tau);

  std::vector<double> gbuf(P);
  auto pair_grad = [&](std::size_t i, std::size_t j, std::span<double> out) {
    if (dir == Direction::Forward)
      similarity_grad(model, ds.anchor(i), ds.target(j), out);
    else
      similarity_grad(model, ds.anchor(j), ds.target(i), out);
  };

  for (std::size_t bi = 0; bi < B; ++bi) {
    const std::size_t i = batch[bi];
    const double e_ii = pair_sim(model, ds, dir, i, i);
    const double c_i = inv_B * scale / (eps_pos + dir_state.u[i]);
    double a_sum = 0.0;
    for (std::size_t bj = 0; bj < B; ++bj) {
      const std::size_t j = batch[bj];
      if (j == i) continue;
      const double a_ij = std::exp(
          (pair_sim(model, ds, dir, i, j) - e_ii - dir_state.zeta[j]) / tau);
      a_sum += a_ij;
      pair_grad(i, j, gbuf);
      const double c = c_i * a_ij;
      for (std::size_t p = 0; p < P; ++p) grad[p] += c * gbuf[p];
    }
    pair_grad(i, i, gbuf);
    const double c = c_i * a_sum;
    for (std::size_t p = 0; p < P; ++p) grad[p] -= c * gbuf[p];
  }
}

void nuclr_step(NuclrState& st, std::span<const std::size_t> batch,
                const PairedDataset& ds, const NuclrConfig& cfg,
                std::uint64_t total_steps, bool freeze) {
  const SimilarityModel model = st.model;  // evaluate at w_t throughout
  const std::size_t B = batch.size();
  const bool zeta_frozen = freeze || cfg.sogclr;

  struct DirWork {
    DirectionState* state;
    Direction dir;
    std::vector<double> gz;
  };
  std::vector<DirWork> dirs;
  dirs.push_back({&st.fwd, Direction::Forward, {}});
  if (cfg.mode == Mode::Symmetric)
    dirs.push_back({&st.bwd, Direction::Backward, {}});

  // Phi estimates and moving averages first; both gradients are then taken
  // at the pre-update zeta.
  std::vector<double> phi_hats(B);
  for (auto& d : dirs) {
    for (std::size_t b = 0; b < B; ++b)
      phi_hats[b] = minibatch_phi(model, ds, d.state->zeta, cfg.tau, batch[b],
                                  batch, d.dir);
    update_u(*d.state, batch, phi_hats, cfg.gamma);
    if (!zeta_frozen)
      d.gz = grad_zeta(model, ds, *d.state, cfg.tau, batch, d.dir);
  }

  std::vector<double> gw(st.model.params.size(), 0.0);
  std::vector<double> gbuf(st.model.params.size());
  for (auto& d : dirs) {
    grad_w(model, ds, *d.state, cfg.tau, batch, gbuf, d.dir);
    for (std::size_t p = 0; p < gw.size(); ++p) gw[p] += gbuf[p];
  }

  const double lr_z =
      scheduled_lr(cfg.lr_zeta, cfg.schedule, st.step, total_steps);
  const double lr_w =
      scheduled_lr(cfg.lr_w, cfg.schedule, st.step, total_steps);

  if (!zeta_frozen) {
    for (auto& d : dirs) {
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t j = batch[b];
        double& v = d.state->v_zeta[j];
        v = cfg.momentum_zeta * v + d.gz[b];
        d.state->zeta[j] -= lr_z * v;
      }
      d.state->xi = std::max(d.state->xi, inf_norm(d.state->zeta));
    }
  }

  if (cfg.adaptive_w) {
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double t = static_cast<double>(st.step + 1);
    for (std::size_t p = 0; p < gw.size(); ++p) {
      st.adam_m[p] = b1 * st.adam_m[p] + (1.0 - b1) * gw[p];
      st.adam_v[p] = b2 * st.adam_v[p] + (1.0 - b2) * gw[p] * gw[p];
      const double mhat = st.adam_m[p] / (1.0 - std::pow(b1, t));
      const double vhat = st.adam_v[p] / (1.0 - std::pow(b2, t));
      st.model.params[p] -= lr_w * mhat / (std::sqrt(vhat) + eps);
    }
  } else {
    for (std::size_t p = 0; p < gw.size(); ++p) {
      st.v_w[p] = cfg.momentum_w * st.v_w[p] + gw[p];
      st.model.params[p] -= lr_w * st.v_w[p];
    }
  }
  ++st.step;
}

namespace {

// Normalized embeddings of every anchor (or target) row.
std::vector<double> embed_all(const LinearCosineModel& m,
                              const PairedDataset& ds, bool anchors) {
  const int dl = m.d_latent;
  std::vector<double> out(ds.n * dl);
  for (std::size_t i = 0; i < ds.n; ++i) {
    std::span<double> row(out.data() + i * dl, static_cast<std::size_t>(dl));
    if (anchors)
      embed_anchor(m, ds.anchor(i), row);
    else
      embed_target(m, ds.target(i), row);
  }
  return out;
}

}  // namespace

double full_psi(const SimilarityModel& model, const PairedDataset& ds,
                std::span<const double> zeta, double tau, Direction dir) {
  const std::size_t n = ds.n;
  if (zeta.size() != n) throw std::invalid_argument("zeta length != n");
  const auto& kr = kern::active();
  std::vector<double> sims(n);

  // Cosine models embed once; the row loop is then a plain inner product.
  const LinearCosineModel* lc = std::get_if<LinearCosineModel>(&model);
  std::vector<double> ue, ve;
  if (lc) {
    ue = embed_all(*lc, ds, true);
    ve = embed_all(*lc, ds, false);
  }
  const int dl = lc ? lc->d_latent : 0;

  double acc = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (lc) {
      const double* a = (dir == Direction::Forward ? ue : ve).data() + i * dl;
      const std::vector<double>& other = dir == Direction::Forward ? ve : ue;
      for (std::size_t j = 0; j < n; ++j)
        sims[j] = std::clamp(
            kr.dot(a, other.data() + j * dl, static_cast<std::size_t>(dl)),
            -1.0, 1.0);
    } else {
      for (std::size_t j = 0; j < n; ++j)
        sims[j] = pair_sim(model, ds, dir, i, j);
    }
    const double e_ii = sims[i];
    const double m = kr.max_minus(sims.data(), zeta.data(), n) - e_ii;
    const double s = kr.exp_shift_sum(sims.data(), zeta.data(), m + e_ii,
                                      1.0 / tau, nullptr, n);
    const double term = tau * (std::log(s)) + m;
    const double y = term - comp;
    const double t = acc + y;
    comp = (t - acc) - y;
    acc = t;
  }
  return acc / static_cast<double>(n);
}

double full_phi(const SimilarityModel& model, const PairedDataset& ds,
                std::span<const double> zeta, double tau, Direction dir) {
  double zmean = 0.0;
  for (double z : zeta) zmean += z;
  zmean /= static_cast<double>(zeta.size());
  return full_psi(model, ds, zeta, tau, dir) + zmean;
}

TrainResult train(const PairedDataset& ds, LinearCosineModel model,
                  const NuclrConfig& cfg, CounterRng& rng,
                  const PairedDataset* eval_ds) {
  cfg.validate(ds.n);
  NuclrState st = make_state(std::move(model), ds.n, cfg);
  const std::size_t steps_per_epoch = ds.n / cfg.batch;
  const std::uint64_t total_steps =
      static_cast<std::uint64_t>(steps_per_epoch) * cfg.epochs;

  std::vector<std::size_t> perm(ds.n);
  for (std::size_t i = 0; i < ds.n; ++i) perm[i] = i;

  TrainResult res;
  res.metrics.reserve(cfg.epochs);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = ds.n - 1; i > 0; --i) {
      const std::size_t j = rng.below(i + 1);
      std::swap(perm[i], perm[j]);
    }
    const bool freeze = epoch < cfg.freeze_epochs;
    for (std::size_t b = 0; b + cfg.batch <= ds.n; b += cfg.batch) {
      std::span<const std::size_t> batch(perm.data() + b, cfg.batch);
      nuclr_step(st, batch, ds, cfg, total_steps, freeze);
    }

    EpochMetrics row;
    row.epoch = epoch;
    const SimilarityModel cur = st.model;
    if (ds.n <= cfg.full_metrics_max_n) {
      row.psi_full = full_psi(cur, ds, st.fwd.zeta, cfg.tau);
      double zmean = 0.0;
      for (double z : st.fwd.zeta) zmean += z;
      row.phi_full = row.psi_full + zmean / static_cast<double>(ds.n);
    } else {
      row.psi_full = nan;
      row.phi_full = nan;
    }
    row.recall_at_1 = eval_ds ? recall_at_1(cur, *eval_ds) : nan;
    row.zeta_min = *std::min_element(st.fwd.zeta.begin(), st.fwd.zeta.end());
    row.zeta_max = *std::max_element(st.fwd.zeta.begin(), st.fwd.zeta.end());
    row.xi = st.fwd.xi;
    res.metrics.push_back(row);
  }
  res.model = st.model;
  res.state = std::move(st);
  return res;
}

double recall_at_1(const SimilarityModel& model, const PairedDataset& ds) {
  const std::size_t n = ds.n;
  std::size_t hits = 0;
  const LinearCosineModel* lc = std::get_if<LinearCosineModel>(&model);
  std::vector<double> ue, ve;
  if (lc) {
    ue = embed_all(*lc, ds, true);
    ve = embed_all(*lc, ds, false);
  }
  const int dl = lc ? lc->d_latent : 0;
  const auto& kr = kern::active();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      const double v =
          lc ? kr.dot(ue.data() + i * dl, ve.data() + j * dl,
                      static_cast<std::size_t>(dl))
             : similarity(model, ds.anchor(i), ds.target(j));
      if (v > best_v) {
        best_v = v;
        best = j;
      }
    }
    if (best == i) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

std::size_t zero_shot_classify(const SimilarityModel& model,
                               std::span<const double> x,
                               const std::vector<std::vector<double>>& protos) {
  if (protos.empty()) throw std::invalid_argument("need at least one prototype");
  std::size_t best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < protos.size(); ++k) {
    const double v = similarity(model, x, protos[k]);
    if (v > best_v) {
      best_v = v;
      best = k;
    }
  }
  return best;
}

std::string metrics_to_csv(const std::vector<EpochMetrics>& rows,
                           std::uint64_t config_hash) {
  std::string out = "# config_hash=" + hex64(config_hash) + "\n";
  out += "epoch,phi_full,psi_full,recall_at_1,zeta_min,zeta_max,xi\n";
  for (const auto& r : rows) {
    out += std::to_string(r.epoch);
    out += "," + format_double(r.phi_full);
    out += "," + format_double(r.psi_full);
    out += "," + format_double(r.recall_at_1);
    out += "," + format_double(r.zeta_min);
    out += "," + format_double(r.zeta_max);
    out += "," + format_double(r.xi);
    out += "\n";
  }
  return out;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<EpochMetrics>& rows,
                       std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << metrics_to_csv(rows, config_hash);
}

void write_state_json(const std::string& path, const NuclrState& st,
                      Mode mode) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  auto dump_dir = [&](const DirectionState& d) {
    out << "{\"xi\": " << format_double(d.xi) << ", \"zeta\": [";
    for (std::size_t i = 0; i < d.zeta.size(); ++i)
      out << (i ? ", " : "") << format_double(d.zeta[i]);
    out << "], \"u\": [";
    for (std::size_t i = 0; i < d.u.size(); ++i)
      out << (i ? ", " : "") << format_double(d.u[i]);
    out << "]}";
  };
  out << "{\"step\": " << st.step << ", \"forward\": ";
  dump_dir(st.fwd);
  if (mode == Mode::Symmetric) {
    out << ", \"backward\": ";
    dump_dir(st.bwd);
  }
  out << "}\n";
}

}  // namespace nuclr::train
