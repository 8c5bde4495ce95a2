#ifndef NUCLR_POPULARITY_HPP
#define NUCLR_POPULARITY_HPP

#include <span>
#include <string>
#include <vector>

#include "nuclr/common.hpp"
#include "nuclr/dataset.hpp"
#include "nuclr/models.hpp"

namespace nuclr::popularity {

// K_ij = E(x_i, y_j), row-major, with the temperature it will be read at.
struct SimilarityMatrix {
  std::size_t n = 0;
  double tau = 0.0;
  std::vector<double> k;

  const double* row(std::size_t i) const { return k.data() + i * n; }
  double diag(std::size_t i) const { return k[i * n + i]; }
};

SimilarityMatrix build_similarity_matrix(const SimilarityModel& model,
                                         const PairedDataset& ds, double tau);

// The convex popularity objective
//   Phi(zeta) = -(1/n) sum_i tau log( exp(K_ii/tau)
//                                     / sum_j exp((K_ij - zeta_j)/tau) )
//               + (1/n) sum_j zeta_j,
// invariant under zeta -> zeta + c 1. Log-sum-exp stabilized.
double phi_objective(std::span<const double> zeta, const SimilarityMatrix& K);

// dPhi/dzeta_j = (1/n) (1 - sum_i s_ij) with s_i the softmax of row i of
// (K - zeta^T)/tau. Components sum to zero.
void phi_gradient(std::span<const double> zeta, const SimilarityMatrix& K,
                  std::span<double> grad);

struct PopularitySolution {
  std::vector<double> zeta;    // mean-centered representative
  std::vector<double> qprime;  // exp(zeta/tau)
  double grad_norm = 0.0;      // achieved inf-norm of the gradient
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> phi_trace;  // accepted objective values, if recorded
};

struct SolverOptions {
  double tol = 1e-10;          // inf-norm gradient target, >= 1e-13
  std::size_t max_iter = 200000;
  double step = 1.0;           // first trial step
  bool record_trace = false;
};

// Gradient descent from zeta = 0 (or the given start) with Armijo
// backtracking; trial steps warm-start from a Barzilai-Borwein estimate and
// accepted iterates are strictly non-increasing in Phi. On return zeta is
// mean-centered (the canonical representative of the solution line).
PopularitySolution solve_popularity(const SimilarityMatrix& K,
                                    const SolverOptions& opts = {},
                                    const std::vector<double>* init = nullptr);

// Max relative residual of the fixed point
//   qbar_j = sum_{j'} exp(K_{j'j}/tau)
//            / sum_{i'} exp((K_{j'i'} - zeta_{i'})/tau),
// evaluated directly (independently of the gradient identity).
double verify_fixed_point(const PopularitySolution& sol,
                          const SimilarityMatrix& K);

// Pins the free scale against a reference popularity:
// Z = max(qprime) / max(q_true), qtilde = qprime / Z. Diagnostic only.
struct ScaleResult {
  double z = 0.0;
  std::vector<double> qtilde;
};
ScaleResult normalize_scale(std::span<const double> qprime,
                            std::span<const double> q_true);

double pearson_correlation(std::span<const double> a,
                           std::span<const double> b);

// Solution CSV (index,zeta,qprime) plus run metadata JSON.
void write_solution_csv(const std::string& path, const PopularitySolution& sol,
                        std::uint64_t config_hash);
void write_solution_meta(const std::string& path, const PopularitySolution& sol,
                         std::size_t n, double tau, double tol,
                         double residual, double scale_z, double pearson,
                         bool have_truth);

}  // namespace nuclr::popularity

#endif  // NUCLR_POPULARITY_HPP
