#include "nuclr/popularity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "nuclr/kernels.hpp"

namespace nuclr::popularity {

SimilarityMatrix build_similarity_matrix(const SimilarityModel& model,
                                         const PairedDataset& ds, double tau) {
  if (tau <= 0.0) throw ConfigError("tau must be positive");
  SimilarityMatrix K;
  K.n = ds.n;
  K.tau = tau;
  K.k.resize(ds.n * ds.n);
  if (std::holds_alternative<BilinearModel>(model) && ds.dx == 2 &&
      ds.dy == 2) {
    for (std::size_t i = 0; i < ds.n; ++i) {
      const double a0 = ds.x[2 * i], a1 = ds.x[2 * i + 1];
      double* row = K.k.data() + i * ds.n;
      for (std::size_t j = 0; j < ds.n; ++j)
        row[j] = a0 * ds.y[2 * j] + a1 * ds.y[2 * j + 1];
    }
    return K;
  }
  if (std::holds_alternative<LinearCosineModel>(model)) {
    // Embed every row once, then fill K from normalized inner products.
    const auto& m = std::get<LinearCosineModel>(model);
    const int dl = m.d_latent;
    std::vector<double> ue(ds.n * dl), ve(ds.n * dl);
    for (std::size_t i = 0; i < ds.n; ++i) {
      embed_anchor(m, ds.anchor(i), {ue.data() + i * dl, (std::size_t)dl});
      embed_target(m, ds.target(i), {ve.data() + i * dl, (std::size_t)dl});
    }
    for (std::size_t i = 0; i < ds.n; ++i) {
      const double* u = ue.data() + i * dl;
      double* row = K.k.data() + i * ds.n;
      for (std::size_t j = 0; j < ds.n; ++j) {
        const double* v = ve.data() + j * dl;
        double c = 0.0;
        for (int d = 0; d < dl; ++d) c += u[d] * v[d];
        row[j] = std::clamp(c, -1.0, 1.0);
      }
    }
    return K;
  }
  for (std::size_t i = 0; i < ds.n; ++i)
    for (std::size_t j = 0; j < ds.n; ++j)
      K.k[i * ds.n + j] = similarity(model, ds.anchor(i), ds.target(j));
  return K;
}

double phi_objective(std::span<const double> zeta, const SimilarityMatrix& K) {
  const std::size_t n = K.n;
  if (zeta.size() != n) throw std::invalid_argument("zeta length != n");
  const auto& kr = kern::active();
  const double inv_tau = 1.0 / K.tau;
  double acc = 0.0, comp = 0.0;  // Kahan over rows
  double zsum = 0.0;
  for (std::size_t j = 0; j < n; ++j) zsum += zeta[j];
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = K.row(i);
    const double m = kr.max_minus(row, zeta.data(), n);
    const double s = kr.exp_shift_sum(row, zeta.data(), m, inv_tau, nullptr, n);
    const double term = m + K.tau * std::log(s) - K.diag(i);
    const double y = term - comp;
    const double t = acc + y;
    comp = (t - acc) - y;
    acc = t;
  }
  return (acc + zsum) / static_cast<double>(n);
}

void phi_gradient(std::span<const double> zeta, const SimilarityMatrix& K,
                  std::span<double> grad) {
  const std::size_t n = K.n;
  if (zeta.size() != n || grad.size() != n)
    throw std::invalid_argument("buffer length != n");
  const auto& kr = kern::active();
  const double inv_tau = 1.0 / K.tau;
  std::vector<double> terms(n);
  std::vector<double> colmass(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = K.row(i);
    const double m = kr.max_minus(row, zeta.data(), n);
    const double s =
        kr.exp_shift_sum(row, zeta.data(), m, inv_tau, terms.data(), n);
    kr.axpy(1.0 / s, terms.data(), colmass.data(), n);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) grad[j] = inv_n * (1.0 - colmass[j]);
}

PopularitySolution solve_popularity(const SimilarityMatrix& K,
                                    const SolverOptions& opts,
                                    const std::vector<double>* init) {
  if (opts.tol < 1e-13)
    throw ConfigError("tolerance below 1e-13 is not attainable in binary64");
  if (opts.max_iter < 1) throw ConfigError("max_iter must be >= 1");
  if (!(opts.step > 0.0)) throw ConfigError("step must be positive");
  const std::size_t n = K.n;

  PopularitySolution sol;
  sol.zeta.assign(n, 0.0);
  if (init) {
    if (init->size() != n) throw std::invalid_argument("init length != n");
    sol.zeta = *init;
  }

  std::vector<double> g(n), trial(n), prev_z(n), prev_g(n);
  double phi = phi_objective(sol.zeta, K);
  if (opts.record_trace) sol.phi_trace.push_back(phi);
  phi_gradient(sol.zeta, K, g);
  auto inf_norm = [n](const std::vector<double>& v) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::abs(v[i]));
    return m;
  };
  double gn = inf_norm(g);
  double alpha = opts.step;
  bool have_prev = false;
  const auto& kr = kern::active();

  std::size_t it = 0;
  for (; it < opts.max_iter && gn > opts.tol; ++it) {
    // Barzilai-Borwein trial step (s.s / s.y), safeguarded by Armijo.
    double alpha_try = 2.0 * alpha;
    if (have_prev) {
      double ss = 0.0, sy = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double s = sol.zeta[j] - prev_z[j];
        const double y = g[j] - prev_g[j];
        ss += s * s;
        sy += s * y;
      }
      if (sy > 0.0) alpha_try = ss / sy;
    }
    alpha_try = std::clamp(alpha_try, 1e-18, 1e12);

    const double gsq = kr.dot(g.data(), g.data(), n);
    double a = alpha_try;
    double phi_trial = 0.0;
    bool accepted = false;
    while (a >= 1e-18) {
      for (std::size_t j = 0; j < n; ++j) trial[j] = sol.zeta[j] - a * g[j];
      phi_trial = phi_objective(trial, K);
      if (phi_trial <= phi - 1e-4 * a * gsq) {
        accepted = true;
        break;
      }
      a *= 0.5;
    }
    if (!accepted) break;  // flat at fp resolution; report what we reached

    prev_z = sol.zeta;
    prev_g = g;
    have_prev = true;
    sol.zeta.swap(trial);
    phi = phi_trial;
    if (opts.record_trace) sol.phi_trace.push_back(phi);
    alpha = a;
    phi_gradient(sol.zeta, K, g);
    gn = inf_norm(g);
  }

  sol.iterations = it;
  sol.grad_norm = gn;
  sol.converged = gn <= opts.tol;

  double mean = 0.0;
  for (double z : sol.zeta) mean += z;
  mean /= static_cast<double>(n);
  for (double& z : sol.zeta) z -= mean;
  sol.qprime.resize(n);
  for (std::size_t j = 0; j < n; ++j)
    sol.qprime[j] = std::exp(sol.zeta[j] / K.tau);
  return sol;
}

double verify_fixed_point(const PopularitySolution& sol,
                          const SimilarityMatrix& K) {
  const std::size_t n = K.n;
  if (sol.zeta.size() != n) throw std::invalid_argument("solution size != n");
  // log D_{j'} = log sum_{i'} exp((K_{j'i'} - zeta_{i'})/tau), direct pass.
  std::vector<double> logd(n);
  for (std::size_t jp = 0; jp < n; ++jp) {
    const double* row = K.row(jp);
    double m = row[0] - sol.zeta[0];
    for (std::size_t i = 1; i < n; ++i)
      m = std::max(m, row[i] - sol.zeta[i]);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      s += std::exp((row[i] - sol.zeta[i] - m) / K.tau);
    logd[jp] = m / K.tau + std::log(s);
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double rhs = 0.0;
    for (std::size_t jp = 0; jp < n; ++jp)
      rhs += std::exp(K.k[jp * n + j] / K.tau - logd[jp]);
    worst = std::max(worst, std::abs(sol.qprime[j] - rhs) / sol.qprime[j]);
  }
  return worst;
}

ScaleResult normalize_scale(std::span<const double> qprime,
                            std::span<const double> q_true) {
  if (qprime.size() != q_true.size())
    throw std::invalid_argument("vector length mismatch");
  if (qprime.empty()) throw std::invalid_argument("empty vectors");
  double mp = 0.0, mt = 0.0;
  for (double v : qprime) {
    if (!(v > 0.0)) throw std::invalid_argument("qprime must be positive");
    mp = std::max(mp, v);
  }
  for (double v : q_true) {
    if (!(v > 0.0)) throw std::invalid_argument("q_true must be positive");
    mt = std::max(mt, v);
  }
  ScaleResult r;
  r.z = mp / mt;
  r.qtilde.resize(qprime.size());
  for (std::size_t j = 0; j < qprime.size(); ++j)
    r.qtilde[j] = qprime[j] / r.z;
  return r;
}

double pearson_correlation(std::span<const double> a,
                           std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("need two same-length vectors");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  return sab / std::sqrt(saa * sbb);
}

void write_solution_csv(const std::string& path, const PopularitySolution& sol,
                        std::uint64_t config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << "# config_hash=" << hex64(config_hash) << "\n";
  out << "index,zeta,qprime\n";
  for (std::size_t j = 0; j < sol.zeta.size(); ++j)
    out << j << "," << format_double(sol.zeta[j]) << ","
        << format_double(sol.qprime[j]) << "\n";
}

void write_solution_meta(const std::string& path, const PopularitySolution& sol,
                         std::size_t n, double tau, double tol,
                         double residual, double scale_z, double pearson,
                         bool have_truth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << "{\"n\": " << n << ", \"tau\": " << format_double(tau)
      << ", \"tol\": " << format_double(tol)
      << ", \"iterations\": " << sol.iterations
      << ", \"grad_norm\": " << format_double(sol.grad_norm)
      << ", \"converged\": " << (sol.converged ? "true" : "false")
      << ", \"fixed_point_residual\": " << format_double(residual);
  if (have_truth)
    out << ", \"scale_z\": " << format_double(scale_z)
        << ", \"pearson_vs_true\": " << format_double(pearson);
  out << "}\n";
}

}  // namespace nuclr::popularity
