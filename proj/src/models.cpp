#include "nuclr/models.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace nuclr {

namespace {

void project(const double* w, int rows, int cols, std::span<const double> v,
             double* out) {
  for (int r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double* row = w + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) acc += row[c] * v[c];
    out[r] = acc;
  }
}

double norm(const double* v, int n) {
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += v[i] * v[i];
  return std::sqrt(acc);
}

}  // namespace

LinearCosineModel init_linear_cosine(int d_latent, int d_x, int d_y,
                                     double tau, CounterRng& rng) {
  if (d_latent < 1 || d_x < 1 || d_y < 1)
    throw ConfigError("encoder dimensions must be >= 1");
  if (tau <= 0.0) throw ConfigError("tau must be positive");
  LinearCosineModel m;
  m.d_latent = d_latent;
  m.d_x = d_x;
  m.d_y = d_y;
  m.tau = tau;
  m.params.resize(m.w1_size() + m.w2_size());
  const double bx = 1.0 / std::sqrt(static_cast<double>(d_x));
  const double by = 1.0 / std::sqrt(static_cast<double>(d_y));
  for (std::size_t i = 0; i < m.w1_size(); ++i)
    m.params[i] = rng.uniform(-bx, bx);
  for (std::size_t i = 0; i < m.w2_size(); ++i)
    m.params[m.w1_size() + i] = rng.uniform(-by, by);
  return m;
}

std::size_t param_count(const SimilarityModel& model) {
  if (std::holds_alternative<BilinearModel>(model)) return 0;
  const auto& m = std::get<LinearCosineModel>(model);
  return m.w1_size() + m.w2_size();
}

void embed_anchor(const LinearCosineModel& m, std::span<const double> x,
                  std::span<double> out) {
  project(m.w1(), m.d_latent, m.d_x, x, out.data());
  const double nx = norm(out.data(), m.d_latent);
  if (nx < kNormFloor)
    throw std::domain_error("anchor projection norm below floor");
  for (int i = 0; i < m.d_latent; ++i) out[i] /= nx;
}

void embed_target(const LinearCosineModel& m, std::span<const double> y,
                  std::span<double> out) {
  project(m.w2(), m.d_latent, m.d_y, y, out.data());
  const double ny = norm(out.data(), m.d_latent);
  if (ny < kNormFloor)
    throw std::domain_error("target projection norm below floor");
  for (int i = 0; i < m.d_latent; ++i) out[i] /= ny;
}

double similarity(const SimilarityModel& model, std::span<const double> x,
                  std::span<const double> y) {
  if (std::holds_alternative<BilinearModel>(model)) {
    if (x.size() != y.size())
      throw std::invalid_argument("bilinear model needs matching dims");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
  }
  const auto& m = std::get<LinearCosineModel>(model);
  if (static_cast<int>(x.size()) != m.d_x ||
      static_cast<int>(y.size()) != m.d_y)
    throw std::invalid_argument("input dims do not match encoder shapes");
  std::vector<double> u(m.d_latent), v(m.d_latent);
  embed_anchor(m, x, u);
  embed_target(m, y, v);
  double c = 0.0;
  for (int i = 0; i < m.d_latent; ++i) c += u[i] * v[i];
  // Absorb rounding only; unit vectors cannot exceed |cos| = 1 by more
  // than a few ulp.
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return c;
}

void similarity_grad(const SimilarityModel& model, std::span<const double> x,
                     std::span<const double> y, std::span<double> grad) {
  if (std::holds_alternative<BilinearModel>(model))
    throw std::logic_error("bilinear model has no parameters");
  const auto& m = std::get<LinearCosineModel>(model);
  if (grad.size() != m.w1_size() + m.w2_size())
    throw std::invalid_argument("gradient buffer has wrong length");

  std::vector<double> u(m.d_latent), v(m.d_latent);
  project(m.w1(), m.d_latent, m.d_x, x, u.data());
  project(m.w2(), m.d_latent, m.d_y, y, v.data());
  const double nu = norm(u.data(), m.d_latent);
  const double nv = norm(v.data(), m.d_latent);
  if (nu < kNormFloor || nv < kNormFloor)
    throw std::domain_error("projection norm below floor");
  std::vector<double> uh(m.d_latent), vh(m.d_latent);
  double c = 0.0;
  for (int i = 0; i < m.d_latent; ++i) {
    uh[i] = u[i] / nu;
    vh[i] = v[i] / nv;
  }
  for (int i = 0; i < m.d_latent; ++i) c += uh[i] * vh[i];

  // dE/du = (vh - c uh) / |u|, then dE/dW1 = dE/du x^T (and likewise W2).
  for (int r = 0; r < m.d_latent; ++r) {
    const double gu = (vh[r] - c * uh[r]) / nu;
    double* g1 = grad.data() + static_cast<std::size_t>(r) * m.d_x;
    for (int cidx = 0; cidx < m.d_x; ++cidx) g1[cidx] = gu * x[cidx];
  }
  double* g2base = grad.data() + m.w1_size();
  for (int r = 0; r < m.d_latent; ++r) {
    const double gv = (uh[r] - c * vh[r]) / nv;
    double* g2 = g2base + static_cast<std::size_t>(r) * m.d_y;
    for (int cidx = 0; cidx < m.d_y; ++cidx) g2[cidx] = gv * y[cidx];
  }
}

void save_checkpoint(const std::string& path, const SimilarityModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  if (std::holds_alternative<BilinearModel>(model)) {
    out << "{\"kind\": \"bilinear\"}\n";
    return;
  }
  const auto& m = std::get<LinearCosineModel>(model);
  out << "{\"kind\": \"linear_cosine\", \"d_latent\": " << m.d_latent
      << ", \"d_x\": " << m.d_x << ", \"d_y\": " << m.d_y
      << ", \"tau\": " << format_double(m.tau) << ", \"params\": [";
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    if (i) out << ", ";
    out << format_double(m.params[i]);
  }
  out << "]}\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

SimilarityModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint: " + path);
  nlohmann::json j;
  in >> j;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "bilinear") return BilinearModel{};
  if (kind != "linear_cosine")
    throw ConfigError("unknown checkpoint kind: " + kind);
  LinearCosineModel m;
  m.d_latent = j.at("d_latent").get<int>();
  m.d_x = j.at("d_x").get<int>();
  m.d_y = j.at("d_y").get<int>();
  m.tau = j.at("tau").get<double>();
  m.params = j.at("params").get<std::vector<double>>();
  if (m.params.size() != m.w1_size() + m.w2_size())
    throw ConfigError("checkpoint parameter count does not match shapes");
  return m;
}

}  // namespace nuclr
