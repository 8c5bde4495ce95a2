#include "nuclr/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "nuclr/popularity.hpp"
#include "nuclr/world.hpp"

namespace nuclr::bench {

void SweepConfig::validate() const {
  if (tau <= 0.0) throw ConfigError("tau must be positive");
  if (n_list.empty()) throw ConfigError("n_list must not be empty");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] < 1) throw ConfigError("n values must be >= 1");
    if (i > 0 && n_list[i] <= n_list[i - 1])
      throw ConfigError("n_list must be strictly increasing");
  }
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (n_true_risk < 1) throw ConfigError("n_true_risk must be >= 1");
  if (tol < 1e-13) throw ConfigError("tol below 1e-13 is not attainable");
  if (!(gcl_constant > 0.0)) throw ConfigError("gcl constant must be positive");
}

std::string SweepConfig::canonical(const std::string& cmd) const {
  std::string s = "cmd=" + cmd + ";seed=" + std::to_string(seed) +
                  ";tau=" + format_double(tau) + ";n_list=";
  for (std::size_t i = 0; i < n_list.size(); ++i)
    s += (i ? "," : "") + std::to_string(n_list[i]);
  s += ";repeats=" + std::to_string(repeats) +
       ";n_true_risk=" + std::to_string(n_true_risk) +
       ";tol=" + format_double(tol) + ";max_iter=" + std::to_string(max_iter) +
       ";gcl_c=" + format_double(gcl_constant);
  return s;
}

void parallel_tasks(std::size_t n_tasks, std::size_t threads,
                    const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::thread::hardware_concurrency();
  if (threads == 0) threads = 1;
  threads = std::min(threads, n_tasks);
  if (threads <= 1) {
    for (std::size_t t = 0; t < n_tasks; ++t) fn(t);
    return;
  }
  std::atomic<std::size_t> next(0);
  std::vector<std::thread> pool;
  std::atomic<bool> failed(false);
  std::exception_ptr first_error;
  std::mutex err_mu;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t t = next.fetch_add(1);
        if (t >= n_tasks || failed.load()) return;
        try {
          fn(t);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

struct RepeatOutputs {
  bool converged = false;
  double risk_ours = 0.0, risk_gcl = 0.0, risk_mle = 0.0;
  double err_ours = 0.0, err_gcl = 0.0, err_exact = 0.0;
};

// Dataset for (n, repeat): stream n of seed ^ repeat, so repeats are
// independent and each n draws its own fresh world sample.
PairedDataset sweep_dataset(const SweepConfig& cfg, std::size_t n,
                            std::size_t repeat) {
  CounterRng rng(cfg.seed ^ static_cast<std::uint64_t>(repeat), n);
  return world::make_dataset(n, cfg.tau, rng);
}

RepeatOutputs run_cell(const SweepConfig& cfg, std::size_t n,
                       std::size_t repeat, bool want_risks,
                       bool want_error_terms) {
  const PairedDataset ds = sweep_dataset(cfg, n, repeat);
  const std::vector<double> q = world::true_popularity(ds);
  const BilinearModel gt{};

  const popularity::SimilarityMatrix K =
      popularity::build_similarity_matrix(gt, ds, cfg.tau);
  popularity::SolverOptions opts;
  opts.tol = cfg.tol;
  opts.max_iter = cfg.max_iter;
  const popularity::PopularitySolution sol = popularity::solve_popularity(K, opts);

  RepeatOutputs out;
  out.converged = sol.converged;
  if (!sol.converged) return out;

  const popularity::ScaleResult scaled =
      popularity::normalize_scale(sol.qprime, q);
  const std::vector<double> uniform(
      ds.n, static_cast<double>(ds.n) * cfg.gcl_constant);

  if (want_risks) {
    out.risk_ours = mis::empirical_risk(gt, ds, scaled.qtilde, cfg.tau);
    out.risk_gcl = mis::empirical_risk(gt, ds, uniform, cfg.tau);
    out.risk_mle = world::exact_mle_risk(ds);
  }
  if (want_error_terms) {
    out.err_ours =
        mis::approximation_error_term(gt, ds, scaled.qtilde, q, cfg.tau);
    out.err_gcl = mis::approximation_error_term(gt, ds, uniform, q, cfg.tau);
    out.err_exact = mis::approximation_error_term(gt, ds, q, q, cfg.tau);
  }
  return out;
}

}  // namespace

std::vector<GenErrorRow> gen_error_sweep(const SweepConfig& cfg) {
  cfg.validate();
  const std::size_t cells = cfg.n_list.size() * cfg.repeats;

  // One true-risk estimate per repeat, shared by every n and method of
  // that repeat so method gaps are not polluted by independent MC noise.
  std::vector<double> true_risk(cfg.repeats);
  std::vector<RepeatOutputs> outs(cells);

  parallel_tasks(cfg.repeats + cells, cfg.threads, [&](std::size_t t) {
    if (t < cfg.repeats) {
      CounterRng rng(cfg.seed ^ static_cast<std::uint64_t>(t), 999331);
      true_risk[t] = world::estimate_true_risk(BilinearModel{}, cfg.tau,
                                               cfg.n_true_risk, rng);
      return;
    }
    const std::size_t cell = t - cfg.repeats;
    const std::size_t ni = cell / cfg.repeats;
    const std::size_t rep = cell % cfg.repeats;
    outs[cell] = run_cell(cfg, cfg.n_list[ni], rep, true, false);
  });

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<GenErrorRow> rows;
  rows.reserve(cells * 3);
  for (std::size_t ni = 0; ni < cfg.n_list.size(); ++ni) {
    for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
      const RepeatOutputs& o = outs[ni * cfg.repeats + rep];
      const double L = true_risk[rep];
      auto push = [&](const std::string& method, double risk) {
        GenErrorRow r;
        r.n = cfg.n_list[ni];
        r.repeat = rep;
        r.method = method;
        r.converged = o.converged;
        r.empirical_risk = o.converged ? risk : nan;
        r.true_risk = L;
        r.abs_gen_error = o.converged ? std::abs(risk - L) : nan;
        rows.push_back(std::move(r));
      };
      // method order matches the (n, repeat, method) sort contract
      push("gcl", o.risk_gcl);
      push("mle_exact", o.risk_mle);
      push("ours", o.risk_ours);
    }
  }
  return rows;
}

std::vector<ErrorTermRow> error_term_sweep(const SweepConfig& cfg) {
  cfg.validate();
  const std::size_t cells = cfg.n_list.size() * cfg.repeats;
  std::vector<RepeatOutputs> outs(cells);
  parallel_tasks(cells, cfg.threads, [&](std::size_t cell) {
    const std::size_t ni = cell / cfg.repeats;
    const std::size_t rep = cell % cfg.repeats;
    outs[cell] = run_cell(cfg, cfg.n_list[ni], rep, false, true);
  });

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<ErrorTermRow> rows;
  rows.reserve(cells * 3);
  for (std::size_t ni = 0; ni < cfg.n_list.size(); ++ni) {
    for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
      const RepeatOutputs& o = outs[ni * cfg.repeats + rep];
      auto push = [&](const std::string& method, double v) {
        ErrorTermRow r;
        r.n = cfg.n_list[ni];
        r.repeat = rep;
        r.method = method;
        r.converged = o.converged;
        r.error_term = o.converged ? v : nan;
        rows.push_back(std::move(r));
      };
      push("exact", o.err_exact);
      push("gcl", o.err_gcl);
      push("ours", o.err_ours);
    }
  }
  return rows;
}

std::string gen_error_csv(const std::vector<GenErrorRow>& rows,
                          std::uint64_t config_hash) {
  std::string s = "# config_hash=" + hex64(config_hash) + "\n";
  s += "n,repeat,method,empirical_risk,true_risk,abs_gen_error\n";
  for (const auto& r : rows) {
    s += std::to_string(r.n) + "," + std::to_string(r.repeat) + "," + r.method;
    s += "," + format_double(r.empirical_risk);
    s += "," + format_double(r.true_risk);
    s += "," + format_double(r.abs_gen_error);
    s += "\n";
  }
  return s;
}

std::string error_term_csv(const std::vector<ErrorTermRow>& rows,
                           std::uint64_t config_hash) {
  std::string s = "# config_hash=" + hex64(config_hash) + "\n";
  s += "n,repeat,method,error_term\n";
  for (const auto& r : rows) {
    s += std::to_string(r.n) + "," + std::to_string(r.repeat) + "," + r.method;
    s += "," + format_double(r.error_term);
    s += "\n";
  }
  return s;
}

std::string variance_csv(const std::vector<mis::VarianceRow>& rows,
                         std::uint64_t config_hash) {
  std::string s = "# config_hash=" + hex64(config_hash) + "\n";
  s += "scheme,n,m,repeats,mean,variance,exact,abs_bias\n";
  for (const auto& r : rows) {
    s += r.scheme + "," + std::to_string(r.n) + "," + std::to_string(r.m) +
         "," + std::to_string(r.repeats);
    s += "," + format_double(r.mean);
    s += "," + format_double(r.variance);
    s += "," + format_double(r.exact);
    s += "," + format_double(r.abs_bias);
    s += "\n";
  }
  return s;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace nuclr::bench
