#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "nuclr/bench.hpp"
#include "test_helpers.hpp"

namespace bench = nuclr::bench;

namespace {

// Spearman rank correlation; values are distinct in these sweeps.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t pos = 0; pos < idx.size(); ++pos)
      r[idx[pos]] = static_cast<double>(pos);
    return r;
  };
  const auto rx = ranks(xs);
  const auto ry = ranks(ys);
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_SUITE("bench") {
  TEST_CASE("gen-error sweep: row order, counts, thread invariance") {
    bench::SweepConfig cfg;
    cfg.seed = 17;
    cfg.n_list = {40, 80};
    cfg.repeats = 2;
    cfg.n_true_risk = 2000;
    cfg.threads = 1;
    const auto rows1 = bench::gen_error_sweep(cfg);
    REQUIRE(rows1.size() == 2 * 2 * 3);

    // sorted by (n, repeat, method), methods alphabetical
    for (std::size_t i = 1; i < rows1.size(); ++i) {
      const auto& a = rows1[i - 1];
      const auto& b = rows1[i];
      const auto ka = std::make_tuple(a.n, a.repeat, a.method);
      const auto kb = std::make_tuple(b.n, b.repeat, b.method);
      CHECK(ka < kb);
    }

    cfg.threads = 2;
    const auto rows2 = bench::gen_error_sweep(cfg);
    REQUIRE(rows2.size() == rows1.size());
    for (std::size_t i = 0; i < rows1.size(); ++i) {
      CHECK(rows1[i].empirical_risk == rows2[i].empirical_risk);
      CHECK(rows1[i].true_risk == rows2[i].true_risk);
    }

    // shared true risk within a repeat
    for (const auto& r : rows1)
      for (const auto& s : rows1)
        if (r.repeat == s.repeat) CHECK(r.true_risk == s.true_risk);
  }

  TEST_CASE("error-term sweep reproduces the qualitative split") {
    bench::SweepConfig cfg;
    cfg.seed = 23;
    cfg.n_list = {50, 100, 200, 400, 800, 1600};
    cfg.repeats = 5;
    cfg.threads = 2;
    const auto rows = bench::error_term_sweep(cfg);
    REQUIRE(rows.size() == cfg.n_list.size() * cfg.repeats * 3);

    std::map<std::pair<std::string, std::size_t>, std::pair<double, int>> acc;
    for (const auto& r : rows) {
      CHECK(r.converged);
      if (r.method == "exact") CHECK(r.error_term == 0.0);
      auto& slot = acc[{r.method, r.n}];
      slot.first += r.error_term;
      slot.second += 1;
    }
    auto mean_of = [&](const char* method, std::size_t n) {
      const auto& s = acc.at({method, n});
      return s.first / s.second;
    };

    // uniform approximation: non-vanishing error floor
    CHECK(mean_of("gcl", 1600) > 0.5 * mean_of("gcl", 100));

    // solved approximation: decreasing in n
    std::vector<double> ns, ours;
    for (std::size_t n : cfg.n_list) {
      ns.push_back(static_cast<double>(n));
      ours.push_back(mean_of("ours", n));
    }
    CHECK(spearman(ns, ours) < 0.0);
    // and far below the uniform floor at the top end
    CHECK(mean_of("ours", 1600) < mean_of("gcl", 1600));
  }

  TEST_CASE("config hash binds output to input") {
    bench::SweepConfig a;
    a.seed = 1;
    bench::SweepConfig b = a;
    CHECK(nuclr::fnv1a64(a.canonical("x")) == nuclr::fnv1a64(b.canonical("x")));
    b.seed = 2;
    CHECK(nuclr::fnv1a64(a.canonical("x")) != nuclr::fnv1a64(b.canonical("x")));
    b = a;
    b.tau = 0.3;
    CHECK(nuclr::fnv1a64(a.canonical("x")) != nuclr::fnv1a64(b.canonical("x")));
  }

  TEST_CASE("config validation rejects bad sweeps") {
    bench::SweepConfig cfg;
    cfg.n_list = {100, 50};
    CHECK_THROWS_AS(cfg.validate(), nuclr::ConfigError);
    cfg.n_list = {50, 50};
    CHECK_THROWS_AS(cfg.validate(), nuclr::ConfigError);
    cfg.n_list = {50, 100};
    cfg.repeats = 0;
    CHECK_THROWS_AS(cfg.validate(), nuclr::ConfigError);
    cfg.repeats = 1;
    cfg.tol = 1e-14;
    CHECK_THROWS_AS(cfg.validate(), nuclr::ConfigError);
  }

  TEST_CASE("non-converged cells are flagged, not faked") {
    bench::SweepConfig cfg;
    cfg.seed = 29;
    cfg.n_list = {30};
    cfg.repeats = 1;
    cfg.max_iter = 1;  // starve the solver
    cfg.n_true_risk = 500;
    const auto rows = bench::gen_error_sweep(cfg);
    REQUIRE(rows.size() == 3);
    for (const auto& r : rows) {
      CHECK_FALSE(r.converged);
      CHECK(std::isnan(r.empirical_risk));
      CHECK(std::isnan(r.abs_gen_error));
      CHECK(std::isfinite(r.true_risk));
    }
  }
}
