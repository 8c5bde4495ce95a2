// Command-line front end: dataset generation, popularity solving, the
// generalization-error and error-term sweeps, the MIS variance study and
// toy NUCLR training. Every stochastic subcommand requires --seed and is
// byte-reproducible from its flags.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "nuclr/bench.hpp"
#include "nuclr/bimodal.hpp"
#include "nuclr/dataset.hpp"
#include "nuclr/mis.hpp"
#include "nuclr/popularity.hpp"
#include "nuclr/train.hpp"
#include "nuclr/world.hpp"

namespace {

using nuclr::ConfigError;
using nuclr::ConvergenceError;

nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad config JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  return j;
}

// --config overrides flags: values found in the file replace whatever the
// command line produced.
template <typename T>
void overlay(const nlohmann::json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

std::vector<std::size_t> parse_n_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(static_cast<std::size_t>(std::stoull(tok)));
  }
  if (out.empty()) throw ConfigError("empty n list");
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> parse_grid(
    const std::string& text) {
  std::vector<std::pair<std::size_t, std::size_t>> grid;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos)
      throw ConfigError("grid entries look like n:m");
    grid.emplace_back(std::stoull(tok.substr(0, colon)),
                      std::stoull(tok.substr(colon + 1)));
  }
  if (grid.empty()) throw ConfigError("empty grid");
  return grid;
}

std::vector<nuclr::mis::WeightingScheme> parse_schemes(
    const std::string& text) {
  std::vector<nuclr::mis::WeightingScheme> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "balance")
      out.push_back({nuclr::mis::WeightKind::BalanceHeuristic, 0});
    else if (tok == "uniform")
      out.push_back({nuclr::mis::WeightKind::Uniform, 0});
    else if (tok.rfind("single:", 0) == 0)
      out.push_back({nuclr::mis::WeightKind::SingleDistribution,
                     std::stoull(tok.substr(7))});
    else
      throw ConfigError("unknown scheme: " + tok);
  }
  if (out.empty()) throw ConfigError("empty scheme list");
  return out;
}

struct SeedFlag {
  std::uint64_t value = 0;
  bool set = false;
};

void add_seed(CLI::App* cmd, SeedFlag& seed) {
  cmd->add_option_function<std::uint64_t>(
      "--seed",
      [&seed](const std::uint64_t& v) {
        seed.value = v;
        seed.set = true;
      },
      "RNG seed (required)");
}

void require_seed(const SeedFlag& seed, const nlohmann::json& cfgfile) {
  if (!seed.set && !cfgfile.contains("seed"))
    throw ConfigError("--seed is required for stochastic commands");
}

std::uint64_t seed_value(const SeedFlag& seed, const nlohmann::json& cfgfile) {
  if (cfgfile.contains("seed")) return cfgfile.at("seed").get<std::uint64_t>();
  return seed.value;
}

int run(int argc, char** argv) {
  CLI::App app{"Discriminative probabilistic modeling over continuous "
               "domains: MIS partition estimators, the convex popularity "
               "solver, NUCLR training and the synthetic benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON file whose fields override flags")
      ->expected(1);

  // ---- gen-data ----------------------------------------------------------
  auto* gen = app.add_subcommand("gen-data", "Sample a synthetic dataset");
  SeedFlag gen_seed;
  std::size_t gen_n = 100;
  double gen_tau = 0.2;
  std::string gen_out = "data.csv";
  add_seed(gen, gen_seed);
  gen->add_option("--n", gen_n, "number of pairs");
  gen->add_option("--tau", gen_tau, "temperature");
  gen->add_option("--out", gen_out, "output CSV path (JSON sidecar follows)");

  // ---- solve-popularity --------------------------------------------------
  auto* solve = app.add_subcommand("solve-popularity",
                                   "Solve the convex popularity problem");
  std::string solve_data, solve_out = "solution", solve_model = "bilinear";
  double solve_tau = -1.0, solve_tol = 1e-10, solve_step = 1.0;
  std::size_t solve_max_iter = 200000;
  bool solve_no_normalize = false;
  solve->add_option("--data", solve_data, "dataset CSV")->required();
  solve->add_option("--tau", solve_tau, "temperature (default: sidecar)");
  solve->add_option("--tol", solve_tol, "gradient inf-norm tolerance");
  solve->add_option("--max-iter", solve_max_iter, "iteration cap");
  solve->add_option("--step", solve_step, "initial trial step");
  solve->add_option("--model", solve_model,
                    "bilinear or a checkpoint JSON path");
  solve->add_option("--out", solve_out, "output prefix");
  solve->add_flag("--no-normalize", solve_no_normalize,
                  "skip the ground-truth scale diagnostic");

  // ---- sweeps -------------------------------------------------------------
  auto add_sweep_flags = [](CLI::App* cmd, SeedFlag& seed,
                            nuclr::bench::SweepConfig& cfg, std::string& nlist,
                            std::string& out) {
    add_seed(cmd, seed);
    cmd->add_option("--tau", cfg.tau, "temperature");
    cmd->add_option("--n-list", nlist, "comma-separated sample sizes");
    cmd->add_option("--repeats", cfg.repeats, "repeats per n");
    cmd->add_option("--tol", cfg.tol, "solver tolerance");
    cmd->add_option("--max-iter", cfg.max_iter, "solver iteration cap");
    cmd->add_option("--gcl-c", cfg.gcl_constant,
                    "free constant c of the uniform approximation n c 1; "
                    "risks shift by tau log(c), comparisons are invariant");
    cmd->add_option("--threads", cfg.threads, "worker threads (0 = auto)");
    cmd->add_option("--out", out, "output CSV path")->required();
  };

  auto* sweep = app.add_subcommand(
      "gen-error-sweep", "Generalization-error comparison across n");
  SeedFlag sweep_seed;
  nuclr::bench::SweepConfig sweep_cfg;
  std::string sweep_nlist, sweep_out;
  add_sweep_flags(sweep, sweep_seed, sweep_cfg, sweep_nlist, sweep_out);
  sweep->add_option("--n-true-risk", sweep_cfg.n_true_risk,
                    "pairs for the true-risk estimate");

  auto* term = app.add_subcommand("error-term-sweep",
                                  "Popularity-approximation error term");
  SeedFlag term_seed;
  nuclr::bench::SweepConfig term_cfg;
  std::string term_nlist, term_out;
  add_sweep_flags(term, term_seed, term_cfg, term_nlist, term_out);

  // ---- variance-study -----------------------------------------------------
  auto* var = app.add_subcommand("variance-study",
                                 "MIS estimator mean/variance per scheme");
  SeedFlag var_seed;
  nuclr::mis::VarianceStudyConfig var_cfg;
  std::string var_grid = "8:1,32:1,8:4";
  std::string var_schemes = "balance,uniform,single:0";
  std::string var_out;
  add_seed(var, var_seed);
  var->add_option("--tau", var_cfg.tau, "temperature");
  var->add_option("--grid", var_grid, "n:m cells, comma separated");
  var->add_option("--repeats", var_cfg.repeats, "resamples per cell");
  var->add_option("--schemes", var_schemes,
                  "balance, uniform, single:<j> (comma separated)");
  var->add_option("--out", var_out, "output CSV path")->required();

  // ---- train-nuclr --------------------------------------------------------
  auto* tr = app.add_subcommand("train-nuclr",
                                "Train the two-encoder model with NUCLR");
  SeedFlag tr_seed;
  nuclr::train::NuclrConfig tr_cfg;
  std::size_t tr_n = 2048, tr_neval = 512;
  int tr_dlatent = 4;
  std::string tr_schedule = "cosine", tr_mode = "symmetric";
  std::string tr_data, tr_outdir = ".";
  double tr_data_tau = -1.0;
  add_seed(tr, tr_seed);
  tr->add_option("--n", tr_n, "training pairs (toy task)");
  tr->add_option("--n-eval", tr_neval, "held-out pairs for recall@1");
  tr->add_option("--d-latent", tr_dlatent, "embedding dimension");
  tr->add_option("--epochs", tr_cfg.epochs, "epochs");
  tr->add_option("--batch", tr_cfg.batch, "batch size (>= 2)");
  tr->add_option("--tau", tr_cfg.tau, "temperature");
  tr->add_option("--gamma", tr_cfg.gamma, "moving-average weight");
  tr->add_option("--lr-w", tr_cfg.lr_w, "model learning rate");
  tr->add_option("--lr-zeta", tr_cfg.lr_zeta, "zeta learning rate");
  tr->add_option("--momentum-w", tr_cfg.momentum_w, "model momentum");
  tr->add_option("--momentum-zeta", tr_cfg.momentum_zeta, "zeta momentum");
  tr->add_option("--zeta0", tr_cfg.zeta0, "initial zeta value");
  tr->add_option("--freeze-epochs", tr_cfg.freeze_epochs,
                 "epochs with zeta frozen");
  tr->add_option("--schedule", tr_schedule, "cosine | constant");
  tr->add_option("--mode", tr_mode, "symmetric | unidirectional");
  tr->add_flag("--sogclr", tr_cfg.sogclr, "zeta pinned to 0, xi to 0");
  tr->add_flag("--adaptive-w", tr_cfg.adaptive_w,
               "Adam-style per-coordinate model steps");
  tr->add_option("--data", tr_data, "user-supplied paired CSV (optional)");
  tr->add_option("--data-tau", tr_data_tau, "tau for --data without sidecar");
  tr->add_option("--out-dir", tr_outdir, "output directory");

  // let --config after a subcommand name reach the top-level option
  for (CLI::App* sub : {gen, solve, sweep, term, var, tr}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << e.what() << "\n";
    return 2;
  }

  nlohmann::json cfile = nlohmann::json::object();
  if (!config_path.empty()) cfile = load_config_file(config_path);

  if (gen->parsed()) {
    overlay(cfile, "n", gen_n);
    overlay(cfile, "tau", gen_tau);
    overlay(cfile, "out", gen_out);
    require_seed(gen_seed, cfile);
    const std::uint64_t seed = seed_value(gen_seed, cfile);
    if (gen_n < 1) throw ConfigError("--n must be >= 1");
    if (gen_tau <= 0.0) throw ConfigError("--tau must be positive");
    nuclr::CounterRng rng(seed);
    const nuclr::PairedDataset ds =
        nuclr::world::make_dataset(gen_n, gen_tau, rng);
    nuclr::write_dataset_csv(gen_out, ds, seed);
    std::cout << "n=" << ds.n << " seed=" << seed << " out=" << gen_out
              << "\n";
    return 0;
  }

  if (solve->parsed()) {
    overlay(cfile, "data", solve_data);
    overlay(cfile, "tau", solve_tau);
    overlay(cfile, "tol", solve_tol);
    overlay(cfile, "max_iter", solve_max_iter);
    overlay(cfile, "step", solve_step);
    overlay(cfile, "model", solve_model);
    overlay(cfile, "out", solve_out);
    std::optional<double> tau_override;
    if (solve_tau > 0.0) tau_override = solve_tau;
    const nuclr::PairedDataset ds =
        nuclr::read_dataset_csv(solve_data, tau_override);
    nuclr::SimilarityModel model;
    if (solve_model == "bilinear")
      model = nuclr::BilinearModel{};
    else
      model = nuclr::load_checkpoint(solve_model);

    const auto K = nuclr::popularity::build_similarity_matrix(model, ds, ds.tau);
    nuclr::popularity::SolverOptions opts;
    opts.tol = solve_tol;
    opts.max_iter = solve_max_iter;
    opts.step = solve_step;
    const auto sol = nuclr::popularity::solve_popularity(K, opts);
    const double residual = nuclr::popularity::verify_fixed_point(sol, K);

    double scale_z = 0.0, pearson = 0.0;
    bool have_truth = false;
    if (!solve_no_normalize && ds.dx == 2 && ds.dy == 2 &&
        std::holds_alternative<nuclr::BilinearModel>(model)) {
      const std::vector<double> q = nuclr::world::true_popularity(ds);
      const auto scaled = nuclr::popularity::normalize_scale(sol.qprime, q);
      scale_z = scaled.z;
      pearson = nuclr::popularity::pearson_correlation(scaled.qtilde, q);
      have_truth = true;
    }
    const std::string canonical =
        "cmd=solve-popularity;data=" + solve_data +
        ";tau=" + nuclr::format_double(ds.tau) +
        ";tol=" + nuclr::format_double(solve_tol) +
        ";max_iter=" + std::to_string(solve_max_iter) +
        ";step=" + nuclr::format_double(solve_step) + ";model=" + solve_model;
    nuclr::popularity::write_solution_csv(solve_out + ".csv", sol,
                                          nuclr::fnv1a64(canonical));
    nuclr::popularity::write_solution_meta(solve_out + ".meta.json", sol, ds.n,
                                           ds.tau, solve_tol, residual,
                                           scale_z, pearson, have_truth);
    std::cout << "n=" << ds.n << " iterations=" << sol.iterations
              << " grad_norm=" << sol.grad_norm << " residual=" << residual
              << (have_truth
                      ? " pearson=" + nuclr::format_double(pearson)
                      : std::string())
              << "\n";
    if (!sol.converged) {
      std::cerr << "solver did not reach tol=" << solve_tol << "\n";
      return 3;
    }
    return 0;
  }

  auto run_sweep = [&](CLI::App* cmd, SeedFlag& seedf,
                       nuclr::bench::SweepConfig& cfg, std::string& nlist,
                       std::string& out, bool gen_error) -> int {
    overlay(cfile, "tau", cfg.tau);
    overlay(cfile, "repeats", cfg.repeats);
    overlay(cfile, "n_true_risk", cfg.n_true_risk);
    overlay(cfile, "tol", cfg.tol);
    overlay(cfile, "max_iter", cfg.max_iter);
    overlay(cfile, "gcl_c", cfg.gcl_constant);
    overlay(cfile, "threads", cfg.threads);
    overlay(cfile, "out", out);
    if (cfile.contains("n_list"))
      cfg.n_list = cfile.at("n_list").get<std::vector<std::size_t>>();
    else if (!nlist.empty())
      cfg.n_list = parse_n_list(nlist);
    require_seed(seedf, cfile);
    cfg.seed = seed_value(seedf, cfile);
    cfg.validate();
    (void)cmd;

    bool all_converged = true;
    if (gen_error) {
      const auto rows = nuclr::bench::gen_error_sweep(cfg);
      const auto hash =
          nuclr::fnv1a64(cfg.canonical("gen-error-sweep"));
      nuclr::bench::write_text_file(
          out, nuclr::bench::gen_error_csv(rows, hash));
      for (const auto& r : rows) all_converged = all_converged && r.converged;
      std::cout << "rows=" << rows.size() << " out=" << out << "\n";
    } else {
      const auto rows = nuclr::bench::error_term_sweep(cfg);
      const auto hash =
          nuclr::fnv1a64(cfg.canonical("error-term-sweep"));
      nuclr::bench::write_text_file(
          out, nuclr::bench::error_term_csv(rows, hash));
      for (const auto& r : rows) all_converged = all_converged && r.converged;
      std::cout << "rows=" << rows.size() << " out=" << out << "\n";
    }
    if (!all_converged) {
      std::cerr << "some cells did not converge; their rows hold nan\n";
      return 3;
    }
    return 0;
  };

  if (sweep->parsed())
    return run_sweep(sweep, sweep_seed, sweep_cfg, sweep_nlist, sweep_out,
                     true);
  if (term->parsed())
    return run_sweep(term, term_seed, term_cfg, term_nlist, term_out, false);

  if (var->parsed()) {
    overlay(cfile, "tau", var_cfg.tau);
    overlay(cfile, "repeats", var_cfg.repeats);
    overlay(cfile, "grid", var_grid);
    overlay(cfile, "schemes", var_schemes);
    overlay(cfile, "out", var_out);
    require_seed(var_seed, cfile);
    var_cfg.seed = seed_value(var_seed, cfile);
    var_cfg.grid = parse_grid(var_grid);
    var_cfg.schemes = parse_schemes(var_schemes);
    const auto rows = nuclr::mis::estimator_variance_study(var_cfg);
    std::string canonical = "cmd=variance-study;seed=" +
                            std::to_string(var_cfg.seed) +
                            ";tau=" + nuclr::format_double(var_cfg.tau) +
                            ";grid=" + var_grid + ";schemes=" + var_schemes +
                            ";repeats=" + std::to_string(var_cfg.repeats);
    nuclr::bench::write_text_file(
        var_out, nuclr::bench::variance_csv(rows, nuclr::fnv1a64(canonical)));
    std::cout << "rows=" << rows.size() << " out=" << var_out << "\n";
    return 0;
  }

  if (tr->parsed()) {
    overlay(cfile, "n", tr_n);
    overlay(cfile, "n_eval", tr_neval);
    overlay(cfile, "d_latent", tr_dlatent);
    overlay(cfile, "epochs", tr_cfg.epochs);
    overlay(cfile, "batch", tr_cfg.batch);
    overlay(cfile, "tau", tr_cfg.tau);
    overlay(cfile, "gamma", tr_cfg.gamma);
    overlay(cfile, "lr_w", tr_cfg.lr_w);
    overlay(cfile, "lr_zeta", tr_cfg.lr_zeta);
    overlay(cfile, "momentum_w", tr_cfg.momentum_w);
    overlay(cfile, "momentum_zeta", tr_cfg.momentum_zeta);
    overlay(cfile, "zeta0", tr_cfg.zeta0);
    overlay(cfile, "freeze_epochs", tr_cfg.freeze_epochs);
    overlay(cfile, "schedule", tr_schedule);
    overlay(cfile, "mode", tr_mode);
    overlay(cfile, "sogclr", tr_cfg.sogclr);
    overlay(cfile, "adaptive_w", tr_cfg.adaptive_w);
    overlay(cfile, "data", tr_data);
    overlay(cfile, "out_dir", tr_outdir);
    require_seed(tr_seed, cfile);
    const std::uint64_t seed = seed_value(tr_seed, cfile);

    if (tr_schedule == "cosine")
      tr_cfg.schedule = nuclr::train::Schedule::Cosine;
    else if (tr_schedule == "constant")
      tr_cfg.schedule = nuclr::train::Schedule::Constant;
    else
      throw ConfigError("schedule must be cosine or constant");
    if (tr_mode == "symmetric")
      tr_cfg.mode = nuclr::train::Mode::Symmetric;
    else if (tr_mode == "unidirectional")
      tr_cfg.mode = nuclr::train::Mode::Unidirectional;
    else
      throw ConfigError("mode must be symmetric or unidirectional");

    nuclr::PairedDataset train_ds, eval_ds;
    bool have_eval = false;
    if (!tr_data.empty()) {
      std::optional<double> tau_override;
      if (tr_data_tau > 0.0) tau_override = tr_data_tau;
      train_ds = nuclr::read_dataset_csv(tr_data, tau_override);
    } else {
      const auto world = nuclr::bimodal::make_bimodal_world(seed, tr_dlatent,
                                                            8, 0.05);
      nuclr::CounterRng train_rng(seed, 2), eval_rng(seed, 3);
      train_ds = nuclr::bimodal::sample_bimodal(world, tr_n, tr_cfg.tau,
                                                train_rng);
      eval_ds = nuclr::bimodal::sample_bimodal(world, tr_neval, tr_cfg.tau,
                                               eval_rng);
      have_eval = true;
    }

    nuclr::CounterRng init_rng(seed, 4), shuffle_rng(seed, 5);
    nuclr::LinearCosineModel model = nuclr::init_linear_cosine(
        tr_dlatent, train_ds.dx, train_ds.dy, tr_cfg.tau, init_rng);
    const auto result = nuclr::train::train(
        train_ds, std::move(model), tr_cfg, shuffle_rng,
        have_eval ? &eval_ds : nullptr);

    std::string canonical =
        "cmd=train-nuclr;seed=" + std::to_string(seed) +
        ";n=" + std::to_string(train_ds.n) +
        ";epochs=" + std::to_string(tr_cfg.epochs) +
        ";batch=" + std::to_string(tr_cfg.batch) +
        ";tau=" + nuclr::format_double(tr_cfg.tau) +
        ";gamma=" + nuclr::format_double(tr_cfg.gamma) +
        ";lr_w=" + nuclr::format_double(tr_cfg.lr_w) +
        ";lr_zeta=" + nuclr::format_double(tr_cfg.lr_zeta) +
        ";zeta0=" + nuclr::format_double(tr_cfg.zeta0) +
        ";freeze=" + std::to_string(tr_cfg.freeze_epochs) +
        ";schedule=" + tr_schedule + ";mode=" + tr_mode +
        ";sogclr=" + (tr_cfg.sogclr ? "1" : "0");
    const auto hash = nuclr::fnv1a64(canonical);

    std::filesystem::create_directories(tr_outdir);
    nuclr::train::write_metrics_csv(tr_outdir + "/metrics.csv",
                                    result.metrics, hash);
    nuclr::save_checkpoint(tr_outdir + "/checkpoint.json",
                           nuclr::SimilarityModel(result.model));
    nuclr::train::write_state_json(tr_outdir + "/state.json", result.state,
                                   tr_cfg.mode);
    if (!result.metrics.empty())
      std::cout << "epochs=" << result.metrics.size() << " final_recall_at_1="
                << result.metrics.back().recall_at_1 << "\n";
    else
      std::cout << "epochs=0\n";
    return 0;
  }

  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "no convergence: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    // mismatched shapes, bad values: still the user's configuration
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
