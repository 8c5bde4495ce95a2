#include <doctest.h>

#include <cmath>
#include <vector>

#include "nuclr/bimodal.hpp"
#include "nuclr/popularity.hpp"
#include "nuclr/world.hpp"
#include "test_helpers.hpp"

using nuclr::BilinearModel;
using nuclr::CounterRng;
namespace pop = nuclr::popularity;
namespace world = nuclr::world;

namespace {

pop::SimilarityMatrix random_k(std::size_t n, double tau, CounterRng& rng) {
  pop::SimilarityMatrix K;
  K.n = n;
  K.tau = tau;
  K.k.resize(n * n);
  for (auto& v : K.k) v = rng.uniform(-1.0, 1.0);
  return K;
}

std::vector<double> random_zeta(std::size_t n, CounterRng& rng,
                                double range = 1.0) {
  std::vector<double> z(n);
  for (auto& v : z) v = rng.uniform(-range, range);
  return z;
}

}  // namespace

TEST_SUITE("popularity") {
  TEST_CASE("one-sample objective collapses to zero") {
    CounterRng rng(3);
    const auto K = random_k(1, 0.2, rng);
    for (double z : {-3.0, 0.0, 1.7}) {
      const std::vector<double> zeta = {z};
      CHECK(std::abs(pop::phi_objective(zeta, K)) < 1e-15);
      std::vector<double> g(1);
      pop::phi_gradient(zeta, K, g);
      CHECK(std::abs(g[0]) < 1e-15);
    }
  }

  TEST_CASE("objective is invariant under constant shifts") {
    CounterRng rng(7);
    for (int t = 0; t < 12; ++t) {
      const std::size_t n = 2 + (rng.next_u64() % 20);
      const auto K = random_k(n, 0.2, rng);
      auto zeta = random_zeta(n, rng);
      const double base = pop::phi_objective(zeta, K);
      const double c = rng.uniform(-5.0, 5.0);
      for (auto& v : zeta) v += c;
      CHECK(std::abs(pop::phi_objective(zeta, K) - base) < 1e-10);
    }
  }

  TEST_CASE("constant similarity matrix: value, solution, residual") {
    const std::size_t n = 16;
    pop::SimilarityMatrix K;
    K.n = n;
    K.tau = 0.2;
    K.k.assign(n * n, 0.55);
    const std::vector<double> zero(n, 0.0);
    CHECK(std::abs(pop::phi_objective(zero, K) -
                   0.2 * std::log(static_cast<double>(n))) < 1e-12);

    const auto sol = pop::solve_popularity(K);
    REQUIRE(sol.converged);
    for (std::size_t j = 0; j < n; ++j) {
      CHECK(std::abs(sol.zeta[j]) < 1e-10);
      CHECK(std::abs(sol.qprime[j] - 1.0) < 1e-9);
    }
    CHECK(pop::verify_fixed_point(sol, K) < 1e-12);
  }

  TEST_CASE("gradient components sum to zero") {
    CounterRng rng(11);
    for (int t = 0; t < 12; ++t) {
      const std::size_t n = 2 + (rng.next_u64() % 30);
      const auto K = random_k(n, 0.2, rng);
      const auto zeta = random_zeta(n, rng);
      std::vector<double> g(n);
      pop::phi_gradient(zeta, K, g);
      double total = 0.0;
      for (double v : g) total += v;
      CHECK(std::abs(total) < 1e-12);
    }
  }

  TEST_CASE("gradient matches central finite differences") {
    CounterRng rng(13);
    for (int t = 0; t < 6; ++t) {
      const std::size_t n = 6;
      const auto K = random_k(n, 0.2, rng);
      const auto zeta = random_zeta(n, rng);
      std::vector<double> g(n);
      pop::phi_gradient(zeta, K, g);
      const auto fd = testutil::fd_gradient(
          [&](const std::vector<double>& z) { return pop::phi_objective(z, K); },
          zeta);
      CHECK(testutil::rel_inf_error(g, fd, 1e-9) < 1e-6);
    }
  }

  TEST_CASE("objective is convex and bounded below by -2") {
    CounterRng rng(17);
    for (int t = 0; t < 10; ++t) {
      const std::size_t n = 2 + (rng.next_u64() % 12);
      const auto K = random_k(n, 0.2, rng);
      const auto z1 = random_zeta(n, rng, 2.0);
      const auto z2 = random_zeta(n, rng, 2.0);
      const double lam = rng.uniform(0.05, 0.95);
      std::vector<double> mix(n);
      for (std::size_t j = 0; j < n; ++j)
        mix[j] = lam * z1[j] + (1.0 - lam) * z2[j];
      const double lhs = pop::phi_objective(mix, K);
      const double rhs = lam * pop::phi_objective(z1, K) +
                         (1.0 - lam) * pop::phi_objective(z2, K);
      CHECK(lhs <= rhs + 1e-10);
      CHECK(pop::phi_objective(z1, K) >= -2.0);
    }
  }

  TEST_CASE("solver: descent is monotone and both starts agree") {
    CounterRng rng(19);
    const auto ds = world::make_dataset(60, 0.2, rng);
    const auto K = pop::build_similarity_matrix(BilinearModel{}, ds, 0.2);

    pop::SolverOptions opts;
    opts.tol = 1e-12;
    opts.record_trace = true;
    const auto from_zero = pop::solve_popularity(K, opts);
    REQUIRE(from_zero.converged);
    for (std::size_t i = 1; i < from_zero.phi_trace.size(); ++i)
      CHECK(from_zero.phi_trace[i] <= from_zero.phi_trace[i - 1]);

    const auto start = random_zeta(K.n, rng, 1.0);
    const auto from_random = pop::solve_popularity(K, opts, &start);
    REQUIRE(from_random.converged);
    double gap = 0.0;
    for (std::size_t j = 0; j < K.n; ++j)
      gap = std::max(gap, std::abs(from_zero.zeta[j] - from_random.zeta[j]));
    CHECK(gap < 1e-8);
  }

  TEST_CASE("fixed point holds at the solution and breaks off it") {
    CounterRng rng(23);
    const auto ds = world::make_dataset(100, 0.2, rng);
    const auto K = pop::build_similarity_matrix(BilinearModel{}, ds, 0.2);
    auto sol = pop::solve_popularity(K, {1e-10, 200000, 1.0, false});
    REQUIRE(sol.converged);
    CHECK(pop::verify_fixed_point(sol, K) <= 1e-8);

    auto perturbed = sol;
    perturbed.zeta[3] += 0.1;
    perturbed.qprime[3] = std::exp(perturbed.zeta[3] / K.tau);
    CHECK(pop::verify_fixed_point(perturbed, K) > 1e-3);
  }

  TEST_CASE("solution set is closed under positive scaling") {
    CounterRng rng(27);
    const auto ds = world::make_dataset(40, 0.2, rng);
    const auto K = pop::build_similarity_matrix(BilinearModel{}, ds, 0.2);
    const auto sol = pop::solve_popularity(K);
    REQUIRE(sol.converged);
    const double r0 = pop::verify_fixed_point(sol, K);
    for (double c : {0.5, 2.0, 10.0}) {
      auto scaled = sol;
      for (std::size_t j = 0; j < K.n; ++j) {
        scaled.qprime[j] = c * sol.qprime[j];
        scaled.zeta[j] = sol.zeta[j] + K.tau * std::log(c);
      }
      CHECK(std::abs(pop::verify_fixed_point(scaled, K) - r0) < 1e-9);
    }
  }

  TEST_CASE("scale normalization against a reference") {
    const std::vector<double> qp = {2.0, 4.0}, qt = {1.0, 2.0};
    const auto r = pop::normalize_scale(qp, qt);
    CHECK(r.z == 2.0);
    CHECK(r.qtilde[0] == 1.0);
    CHECK(r.qtilde[1] == 2.0);
    const auto same = pop::normalize_scale(qt, qt);
    CHECK(same.z == 1.0);
  }

  TEST_CASE("solved popularity tracks the truth at n=100") {
    CounterRng rng(29);
    const auto ds = world::make_dataset(100, 0.2, rng);
    const auto q = world::true_popularity(ds);
    const auto K = pop::build_similarity_matrix(BilinearModel{}, ds, 0.2);
    const auto sol = pop::solve_popularity(K);
    REQUIRE(sol.converged);
    const auto scaled = pop::normalize_scale(sol.qprime, q);
    CHECK(pop::pearson_correlation(scaled.qtilde, q) > 0.9);
  }

  TEST_CASE("solver handles encoder-built similarity matrices") {
    const auto bw = nuclr::bimodal::make_bimodal_world(71, 4, 8, 0.05);
    CounterRng drng(71, 2), mrng(72);
    const auto ds = nuclr::bimodal::sample_bimodal(bw, 50, 0.2, drng);
    const nuclr::LinearCosineModel m =
        nuclr::init_linear_cosine(4, 8, 8, 0.2, mrng);
    const auto K =
        pop::build_similarity_matrix(nuclr::SimilarityModel(m), ds, 0.2);
    for (double v : K.k) {
      REQUIRE(v >= -1.0);
      REQUIRE(v <= 1.0);
    }
    const auto sol = pop::solve_popularity(K);
    REQUIRE(sol.converged);
    CHECK(pop::verify_fixed_point(sol, K) <= 1e-6);
  }

  TEST_CASE("config guard rails") {
    CounterRng rng(31);
    const auto K = random_k(4, 0.2, rng);
    CHECK_THROWS_AS(pop::solve_popularity(K, {1e-14, 100, 1.0, false}),
                    nuclr::ConfigError);
    CHECK_THROWS_AS(pop::solve_popularity(K, {1e-10, 0, 1.0, false}),
                    nuclr::ConfigError);
    // max_iter exhaustion flags the result instead of throwing
    const auto sol = pop::solve_popularity(K, {1e-13, 1, 1.0, false});
    CHECK_FALSE(sol.converged);
  }
}
