#ifndef NUCLR_BENCH_HPP
#define NUCLR_BENCH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "nuclr/common.hpp"
#include "nuclr/mis.hpp"

namespace nuclr::bench {

// Shared knobs of the sweep subcommands. Repeats run in parallel with
// seeds derived as seed ^ repeat; rows are emitted sorted by
// (n, repeat, method) so outputs are byte-stable.
struct SweepConfig {
  std::uint64_t seed = 0;
  double tau = 0.2;
  std::vector<std::size_t> n_list = {50, 100, 200, 400, 800, 1600};
  std::size_t repeats = 10;
  std::size_t n_true_risk = 50000;
  double tol = 1e-10;
  std::size_t max_iter = 200000;
  double gcl_constant = 1.0;  // c in the uniform approximation q~ = n c 1
  std::size_t threads = 0;    // 0 = hardware concurrency

  void validate() const;
  std::string canonical(const std::string& cmd) const;
};

struct GenErrorRow {
  std::size_t n = 0, repeat = 0;
  std::string method;  // gcl | mle_exact | ours
  double empirical_risk = 0.0, true_risk = 0.0, abs_gen_error = 0.0;
  bool converged = true;  // solver status; risks are NaN when false
};

// Generalization-error comparison on the synthetic world, ground-truth
// model: the MIS risk with the solved popularity ("ours", scale-aligned),
// the same risk under the uniform approximation n c 1 ("gcl"), and the MLE
// risk with exact partition functions ("mle_exact"), each against one
// shared per-repeat Monte Carlo estimate of the true risk.
std::vector<GenErrorRow> gen_error_sweep(const SweepConfig& cfg);

struct ErrorTermRow {
  std::size_t n = 0, repeat = 0;
  std::string method;  // exact | gcl | ours
  double error_term = 0.0;
  bool converged = true;
};

std::vector<ErrorTermRow> error_term_sweep(const SweepConfig& cfg);

std::string gen_error_csv(const std::vector<GenErrorRow>& rows,
                          std::uint64_t config_hash);
std::string error_term_csv(const std::vector<ErrorTermRow>& rows,
                           std::uint64_t config_hash);
std::string variance_csv(const std::vector<mis::VarianceRow>& rows,
                         std::uint64_t config_hash);

void write_text_file(const std::string& path, const std::string& content);

// Simple fixed-size worker pool; task order of completion is irrelevant
// because every task writes only its own slot.
void parallel_tasks(std::size_t n_tasks, std::size_t threads,
                    const std::function<void(std::size_t)>& fn);

}  // namespace nuclr::bench

#endif  // NUCLR_BENCH_HPP
