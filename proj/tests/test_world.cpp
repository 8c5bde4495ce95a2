#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "nuclr/quadrature.hpp"
#include "nuclr/world.hpp"
#include "test_helpers.hpp"

using nuclr::CounterRng;
using nuclr::Vec2;
namespace world = nuclr::world;

namespace {

// Independent quadrature oracle for the partition integral.
double partition_quad(const Vec2& x, double tau) {
  return nuclr::quad::integrate_2d(
      [&](double y1, double y2) {
        return std::exp((x[0] * y1 + x[1] * y2) / tau);
      },
      0.0, 1.0, 0.0, 1.0, 64);
}

}  // namespace

TEST_SUITE("world") {
  TEST_CASE("anchor sampling: domain, acceptance rate, centroid") {
    CounterRng rng(123);
    const std::size_t draws = 100000;
    std::size_t proposals = 0;
    double mean_x2 = 0.0;
    for (std::size_t i = 0; i < draws; ++i) {
      const Vec2 p = world::sample_anchor(rng, &proposals);
      REQUIRE(p[0] * p[0] + p[1] * p[1] <= 1.0);
      REQUIRE(p[1] >= 0.0);
      REQUIRE(p[0] >= -1.0);
      REQUIRE(p[0] <= 1.0);
      mean_x2 += p[1];
    }
    mean_x2 /= static_cast<double>(draws);

    // Acceptance rate = half-disk area / box area = (pi/2) / 2.
    const double rate =
        static_cast<double>(draws) / static_cast<double>(proposals);
    CHECK(std::abs(rate - 3.14159265358979323846 / 4.0) < 0.01);

    // Centroid height from the quadrature oracle:
    // int_{-1}^{1} (1 - t^2)/2 dt over the half-disk area pi/2.
    const double num = nuclr::quad::integrate_1d(
        [](double t) { return 0.5 * (1.0 - t * t); }, -1.0, 1.0, 32);
    const double centroid = num / (3.14159265358979323846 / 2.0);
    CHECK(std::abs(centroid - 4.0 / (3.0 * 3.14159265358979323846)) < 1e-12);
    CHECK(std::abs(mean_x2 - centroid) < 0.01);
  }

  TEST_CASE("partition function: closed form vs quadrature") {
    CHECK(world::partition_function({0.0, 0.0}, 0.2) == 1.0);

    const double z10 = world::partition_function({1.0, 0.0}, 0.2);
    CHECK(std::abs(z10 - 0.2 * (std::exp(5.0) - 1.0)) < 1e-12);
    CHECK(std::abs(z10 - partition_quad({1.0, 0.0}, 0.2)) < 1e-10);

    const double z68 = world::partition_function({0.6, 0.8}, 0.2);
    CHECK(std::abs(z68 - partition_quad({0.6, 0.8}, 0.2)) < 1e-10);
    CHECK(z68 == doctest::Approx(85.2452).epsilon(1e-4));

    CounterRng rng(77);
    for (int i = 0; i < 100; ++i) {
      const Vec2 x = world::sample_anchor(rng);
      const double z = world::partition_function(x, 0.2);
      CHECK(std::abs(z - partition_quad(x, 0.2)) <= 1e-10 * std::max(1.0, z));
    }
    CHECK_THROWS_AS(world::partition_function({0.1, 0.1}, 0.0),
                    std::invalid_argument);
  }

  TEST_CASE("axis partition is continuous through a = 0") {
    CHECK(std::abs(world::axis_partition(1e-9, 0.2) - 1.0) < 1e-6);
    CHECK(std::abs(world::axis_partition(-1e-9, 0.2) - 1.0) < 1e-6);
    // branch below 1e-12 agrees with the direct formula just above it
    const double lo = world::axis_partition(0.9e-12, 0.2);
    const double hi = world::axis_partition(1.1e-12, 0.2);
    CHECK(std::abs(lo - hi) < 1e-12);
  }

  TEST_CASE("conditional density values and normalization") {
    CounterRng rng(3);
    for (int i = 0; i < 10; ++i) {
      const Vec2 y = {rng.uniform(), rng.uniform()};
      CHECK(world::conditional_density(y, {0.0, 0.0}, 0.2) == 1.0);
    }
    const double z10 = world::partition_function({1.0, 0.0}, 0.2);
    CHECK(std::abs(world::conditional_density({1.0, 1.0}, {1.0, 0.0}, 0.2) -
                   std::exp(5.0) / z10) < 1e-12);
    CHECK(std::abs(world::conditional_density({0.0, 0.0}, {1.0, 0.0}, 0.2) -
                   1.0 / z10) < 1e-15);

    for (int i = 0; i < 20; ++i) {
      const Vec2 x = world::sample_anchor(rng);
      const double mass = nuclr::quad::integrate_2d(
          [&](double y1, double y2) {
            return world::conditional_density({y1, y2}, x, 0.2);
          },
          0.0, 1.0, 0.0, 1.0, 64);
      CHECK(std::abs(mass - 1.0) < 1e-8);
    }
    CHECK_THROWS_AS(world::conditional_density({1.5, 0.0}, {0.1, 0.1}, 0.2),
                    std::domain_error);
    CHECK_THROWS_AS(world::conditional_density({0.5, 0.5}, {1.0, 1.0}, 0.2),
                    std::domain_error);
  }

  TEST_CASE("conditional sampler: uniform case passes chi-square") {
    CounterRng rng(19);
    const std::size_t draws = 10000;
    std::vector<std::size_t> counts(16, 0);
    for (std::size_t i = 0; i < draws; ++i) {
      const Vec2 y = world::sample_conditional({0.0, 0.0}, 0.2, rng);
      const std::size_t c =
          std::min<std::size_t>(3, static_cast<std::size_t>(y[0] * 4)) * 4 +
          std::min<std::size_t>(3, static_cast<std::size_t>(y[1] * 4));
      ++counts[c];
    }
    const std::vector<double> probs(16, 1.0 / 16.0);
    CHECK(testutil::chi_square_stat(counts, probs, draws) <
          testutil::kChi2Df15Alpha01);
  }

  TEST_CASE("conditional sampler: mean matches the quadrature oracle") {
    // mean of y1 under the density proportional to exp(y1/tau) on [0,1]
    const double tau = 0.2;
    const double mass = nuclr::quad::integrate_1d(
        [&](double y) { return std::exp(y / tau); }, 0.0, 1.0, 64);
    const double mean_oracle = nuclr::quad::integrate_1d(
                                   [&](double y) {
                                     return y * std::exp(y / tau);
                                   },
                                   0.0, 1.0, 64) /
                               mass;
    CHECK(mean_oracle == doctest::Approx(0.80678).epsilon(1e-4));

    CounterRng rng(29);
    const std::size_t draws = 100000;
    double mean = 0.0;
    for (std::size_t i = 0; i < draws; ++i)
      mean += world::sample_conditional({1.0, 0.0}, tau, rng)[0];
    mean /= static_cast<double>(draws);
    CHECK(std::abs(mean - mean_oracle) < 0.005);
  }

  TEST_CASE("conditional sampler: goodness of fit on random anchors") {
    CounterRng arng(31);
    for (int a = 0; a < 5; ++a) {
      const Vec2 x = world::sample_anchor(arng);
      std::vector<double> probs(16);
      for (int cx = 0; cx < 4; ++cx)
        for (int cy = 0; cy < 4; ++cy)
          probs[cx * 4 + cy] = nuclr::quad::integrate_2d(
              [&](double y1, double y2) {
                return world::conditional_density({y1, y2}, x, 0.2);
              },
              cx * 0.25, (cx + 1) * 0.25, cy * 0.25, (cy + 1) * 0.25, 16);
      CounterRng rng(1000 + a);
      const std::size_t draws = 10000;
      std::vector<std::size_t> counts(16, 0);
      for (std::size_t i = 0; i < draws; ++i) {
        const Vec2 y = world::sample_conditional(x, 0.2, rng);
        const std::size_t c =
            std::min<std::size_t>(3, static_cast<std::size_t>(y[0] * 4)) * 4 +
            std::min<std::size_t>(3, static_cast<std::size_t>(y[1] * 4));
        ++counts[c];
      }
      CHECK(testutil::chi_square_stat(counts, probs, draws) <
            testutil::kChi2Df15Alpha01);
    }
  }

  TEST_CASE("envelope: extreme anchors never need ratio > 1") {
    // sample_conditional asserts the ratio internally; drive it hard
    CounterRng rng(43);
    const Vec2 extreme = {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    for (int i = 0; i < 200; ++i)
      CHECK_NOTHROW(world::sample_conditional(extreme, 0.2, rng));
    CHECK(world::envelope_max({-0.5, 0.3}) == doctest::Approx(0.3));
    CHECK(world::envelope_max({0.5, 0.3}) == doctest::Approx(0.8));
  }

  TEST_CASE("true popularity: reductions and brute force") {
    CounterRng rng(57);
    const auto ds1 = world::make_dataset(1, 0.2, rng);
    const auto q1 = world::true_popularity(ds1);
    CHECK(std::abs(q1[0] - world::conditional_density(ds1.target2(0),
                                                      ds1.anchor2(0), 0.2)) <
          1e-12);

    nuclr::PairedDataset flat;
    flat.n = 2;
    flat.dx = flat.dy = 2;
    flat.tau = 0.2;
    flat.x = {0.0, 0.0, 0.0, 0.0};
    flat.y = {0.3, 0.4, 0.9, 0.1};
    const auto q2 = world::true_popularity(flat);
    CHECK(q2[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(q2[1] == doctest::Approx(2.0).epsilon(1e-12));

    const auto ds3 = world::make_dataset(3, 0.2, rng);
    const auto q3 = world::true_popularity(ds3);
    for (std::size_t j = 0; j < 3; ++j) {
      double brute = 0.0;
      for (std::size_t jp = 0; jp < 3; ++jp)
        brute += world::conditional_density(ds3.target2(j), ds3.anchor2(jp),
                                            0.2);
      CHECK(std::abs(q3[j] - brute) < 1e-12 * brute);
    }

    // every popularity entry is at least n times the minimum density
    const auto ds = world::make_dataset(64, 0.2, rng);
    const auto q = world::true_popularity(ds);
    double dmin = 1e300;
    for (std::size_t j = 0; j < ds.n; ++j)
      for (std::size_t jp = 0; jp < ds.n; ++jp)
        dmin = std::min(dmin, world::conditional_density(ds.target2(j),
                                                         ds.anchor2(jp), 0.2));
    CHECK(dmin > 0.0);
    for (double v : q) CHECK(v >= static_cast<double>(ds.n) * dmin);
  }

  TEST_CASE("true risk estimator: consistency across seeds") {
    const double tau = 0.2;
    const std::size_t N = 50000;
    CounterRng r1(101), r2(202);
    const double est1 =
        world::estimate_true_risk(nuclr::BilinearModel{}, tau, N, r1);
    const double est2 =
        world::estimate_true_risk(nuclr::BilinearModel{}, tau, N, r2);
    CHECK(std::isfinite(est1));

    // per-pair standard deviation, measured on its own stream
    CounterRng r3(303);
    std::vector<double> vals(20000);
    for (auto& v : vals) {
      const Vec2 x = world::sample_anchor(r3);
      const Vec2 y = world::sample_conditional(x, tau, r3);
      v = -tau * world::log_conditional_density(y, x, tau);
    }
    const double sd = std::sqrt(testutil::sample_variance(vals));
    CHECK(std::abs(est1 - est2) <
          3.0 * sd / std::sqrt(static_cast<double>(N)) * std::sqrt(2.0));
  }

  TEST_CASE("true risk estimator: error shrinks like sqrt(N)") {
    const double tau = 0.2;
    const std::size_t reps = 150;
    std::vector<double> small(reps), large(reps);
    for (std::size_t r = 0; r < reps; ++r) {
      CounterRng ra(r, 71), rb(r, 72);
      small[r] = world::estimate_true_risk(nuclr::BilinearModel{}, tau, 5000, ra);
      large[r] =
          world::estimate_true_risk(nuclr::BilinearModel{}, tau, 50000, rb);
    }
    const double ratio = std::sqrt(testutil::sample_variance(small) /
                                   testutil::sample_variance(large));
    CHECK(ratio > 2.5);  // sqrt(10) ~ 3.16 expected
    CHECK(ratio < 4.0);
  }

  TEST_CASE("true risk of the flat model is exactly zero") {
    CounterRng rng(404);
    const double risk = world::estimate_true_risk_fn(
        [](const Vec2&, const Vec2&) { return 0.0; },
        [](const Vec2&) { return 0.0; }, 0.2, 5000, rng);
    CHECK(risk == 0.0);
  }

  TEST_CASE("true risk of an encoder model goes through quadrature") {
    CounterRng mrng(505), rng(506);
    const nuclr::LinearCosineModel m =
        nuclr::init_linear_cosine(3, 2, 2, 0.2, mrng);
    const double risk =
        world::estimate_true_risk(nuclr::SimilarityModel(m), 0.2, 200, rng);
    CHECK(std::isfinite(risk));
    // a bounded-similarity density cannot out-model the much sharper truth
    CounterRng rng2(507);
    const double gt_risk =
        world::estimate_true_risk(nuclr::BilinearModel{}, 0.2, 200, rng2);
    CHECK(risk > gt_risk);
  }

  TEST_CASE("dataset round trip via CSV keeps every bit") {
    CounterRng rng(909);
    const auto ds = world::make_dataset(37, 0.2, rng);
    nuclr::write_dataset_csv("tmp_world_ds.csv", ds, 909);
    const auto back = nuclr::read_dataset_csv("tmp_world_ds.csv");
    REQUIRE(back.n == ds.n);
    CHECK(back.tau == ds.tau);
    for (std::size_t i = 0; i < ds.x.size(); ++i) {
      CHECK(back.x[i] == ds.x[i]);
      CHECK(back.y[i] == ds.y[i]);
    }

    // a tau override works without the sidecar
    std::remove("tmp_world_ds.json");
    const auto forced = nuclr::read_dataset_csv("tmp_world_ds.csv", 0.45);
    CHECK(forced.tau == 0.45);
    CHECK_THROWS_AS(nuclr::read_dataset_csv("tmp_world_ds.csv"),
                    nuclr::ConfigError);
    std::remove("tmp_world_ds.csv");
    CHECK_THROWS_AS(nuclr::read_dataset_csv("tmp_world_ds.csv"),
                    nuclr::ConfigError);
  }

  TEST_CASE("malformed dataset files are rejected") {
    {
      std::ofstream f("tmp_bad_ds.csv");
      f << "x1,x2,y1,y2\n0.1,0.2,0.3\n";  // ragged row
    }
    CHECK_THROWS_AS(nuclr::read_dataset_csv("tmp_bad_ds.csv", 0.2),
                    nuclr::ConfigError);
    {
      std::ofstream f("tmp_bad_ds.csv");
      f << "x1,x2,weight\n0.1,0.2,0.3\n";  // unknown column
    }
    CHECK_THROWS_AS(nuclr::read_dataset_csv("tmp_bad_ds.csv", 0.2),
                    nuclr::ConfigError);
    {
      std::ofstream f("tmp_bad_ds.csv");
      f << "x1,x2,y1,y2\n0.1,0.2,0.3,0.4\n";
      std::ofstream s("tmp_bad_ds.json");
      s << "{\"n\": 5, \"tau\": 0.2, \"seed\": 0}\n";  // n mismatch
    }
    CHECK_THROWS_AS(nuclr::read_dataset_csv("tmp_bad_ds.csv"),
                    nuclr::ConfigError);
    std::remove("tmp_bad_ds.csv");
    std::remove("tmp_bad_ds.json");
  }
}
