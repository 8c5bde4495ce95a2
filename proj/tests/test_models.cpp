#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "nuclr/models.hpp"
#include "test_helpers.hpp"

using nuclr::BilinearModel;
using nuclr::CounterRng;
using nuclr::LinearCosineModel;
using nuclr::SimilarityModel;

namespace {

LinearCosineModel identity_model(int d) {
  LinearCosineModel m;
  m.d_latent = m.d_x = m.d_y = d;
  m.params.assign(2 * static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) {
    m.params[i * d + i] = 1.0;
    m.params[d * d + i * d + i] = 1.0;
  }
  return m;
}

}  // namespace

TEST_SUITE("models") {
  TEST_CASE("bilinear is the plain dot product") {
    const SimilarityModel m = BilinearModel{};
    const std::vector<double> x = {1.0, 0.0}, y = {1.0, 1.0};
    CHECK(similarity(m, x, y) == 1.0);
    CHECK(nuclr::param_count(m) == 0);
  }

  TEST_CASE("identity cosine model: aligned and orthogonal inputs") {
    const SimilarityModel m = identity_model(2);
    const std::vector<double> v = {0.6, 0.8};
    CHECK(similarity(m, v, v) == doctest::Approx(1.0).epsilon(1e-15));
    const std::vector<double> e1 = {1.0, 0.0}, e2 = {0.0, 1.0};
    CHECK(similarity(m, e1, e2) == doctest::Approx(0.0).epsilon(1e-15));
  }

  TEST_CASE("output stays in [-1,1] and ignores input scale") {
    CounterRng rng(21);
    const LinearCosineModel lcm = nuclr::init_linear_cosine(4, 3, 5, 0.2, rng);
    const SimilarityModel m = lcm;
    for (int t = 0; t < 10000; ++t) {
      std::vector<double> x(3), y(5);
      for (auto& v : x) v = rng.uniform(-2.0, 2.0);
      for (auto& v : y) v = rng.uniform(-2.0, 2.0);
      double nx = 0.0, ny = 0.0;
      for (double v : x) nx += v * v;
      for (double v : y) ny += v * v;
      if (nx < 1e-4 || ny < 1e-4) continue;  // keep away from the norm floor
      const double s = similarity(m, x, y);
      REQUIRE(s >= -1.0);
      REQUIRE(s <= 1.0);
      std::vector<double> x2 = x;
      for (auto& v : x2) v *= 2.0;
      REQUIRE(std::abs(similarity(m, x2, y) - s) < 1e-12);
    }
  }

  TEST_CASE("gradient matches central finite differences") {
    CounterRng rng(33);
    for (int trial = 0; trial < 20; ++trial) {
      LinearCosineModel m = nuclr::init_linear_cosine(3, 3, 3, 0.2, rng);
      std::vector<double> x(3), y(3);
      for (auto& v : x) v = rng.uniform(-1.0, 1.0) + 0.2;
      for (auto& v : y) v = rng.uniform(-1.0, 1.0) + 0.2;

      std::vector<double> grad(m.params.size());
      similarity_grad(m, x, y, grad);

      auto value_at = [&](const std::vector<double>& p) {
        LinearCosineModel probe = m;
        probe.params = p;
        return similarity(SimilarityModel(probe), x, y);
      };
      const auto fd = testutil::fd_gradient(value_at, m.params);
      CHECK(testutil::rel_inf_error(grad, fd, 1e-9) < 1e-6);
    }
  }

  TEST_CASE("aligned pair sits at the cosine maximum") {
    // x = y with identity encoders: moving W1 toward (1+eps) I keeps the
    // cosine at 1, so the directional derivative along I vanishes.
    const int d = 3;
    LinearCosineModel m = identity_model(d);
    const std::vector<double> x = {0.3, -0.5, 0.81};
    std::vector<double> grad(m.params.size());
    similarity_grad(m, x, x, grad);
    double dir = 0.0;
    for (int i = 0; i < d; ++i) dir += grad[i * d + i];
    CHECK(std::abs(dir) < 1e-12);
  }

  TEST_CASE("degenerate projections are rejected") {
    LinearCosineModel m;
    m.d_latent = m.d_x = m.d_y = 2;
    m.params.assign(8, 0.0);  // W1 = 0
    const std::vector<double> v = {1.0, 1.0};
    CHECK_THROWS_AS(similarity(SimilarityModel(m), v, v), std::domain_error);
    const SimilarityModel bil = BilinearModel{};
    std::vector<double> g;
    CHECK_THROWS_AS(similarity_grad(bil, v, v, g), std::logic_error);
  }

  TEST_CASE("checkpoints round-trip bit for bit") {
    CounterRng rng(48);
    const LinearCosineModel m = nuclr::init_linear_cosine(4, 8, 8, 0.2, rng);
    nuclr::save_checkpoint("tmp_model.json", SimilarityModel(m));
    const SimilarityModel back = nuclr::load_checkpoint("tmp_model.json");
    const auto& b = std::get<LinearCosineModel>(back);
    REQUIRE(b.params.size() == m.params.size());
    for (std::size_t i = 0; i < m.params.size(); ++i)
      CHECK(b.params[i] == m.params[i]);
    CHECK(b.tau == m.tau);
    std::remove("tmp_model.json");
  }

  TEST_CASE("broken checkpoints are rejected") {
    {
      std::ofstream f("tmp_model_bad.json");
      f << "{\"kind\": \"linear_cosine\", \"d_latent\": 2, \"d_x\": 2, "
           "\"d_y\": 2, \"tau\": 0.2, \"params\": [1.0, 2.0]}\n";
    }
    CHECK_THROWS_AS(nuclr::load_checkpoint("tmp_model_bad.json"),
                    nuclr::ConfigError);
    {
      std::ofstream f("tmp_model_bad.json");
      f << "{\"kind\": \"transformer\"}\n";
    }
    CHECK_THROWS_AS(nuclr::load_checkpoint("tmp_model_bad.json"),
                    nuclr::ConfigError);
    std::remove("tmp_model_bad.json");
    CHECK_THROWS_AS(nuclr::load_checkpoint("tmp_model_bad.json"),
                    nuclr::ConfigError);
  }
}
