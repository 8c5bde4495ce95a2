#include "nuclr/dataset.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace nuclr {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string sidecar_path(const std::string& csv_path) {
  const auto pos = csv_path.rfind('.');
  const std::string stem =
      (pos == std::string::npos) ? csv_path : csv_path.substr(0, pos);
  return stem + ".json";
}

void write_dataset_csv(const std::string& csv_path, const PairedDataset& ds,
                       std::uint64_t seed) {
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for write: " + csv_path);
  const std::string canonical = "dataset;n=" + std::to_string(ds.n) +
                                ";tau=" + format_double(ds.tau) +
                                ";seed=" + std::to_string(seed);
  out << "# config_hash=" << hex64(fnv1a64(canonical)) << "\n";
  for (int d = 0; d < ds.dx; ++d) out << (d ? ",x" : "x") << (d + 1);
  for (int d = 0; d < ds.dy; ++d) out << ",y" << (d + 1);
  out << "\n";
  for (std::size_t i = 0; i < ds.n; ++i) {
    for (int d = 0; d < ds.dx; ++d) {
      if (d) out << ",";
      out << format_double(ds.x[i * ds.dx + d]);
    }
    for (int d = 0; d < ds.dy; ++d)
      out << "," << format_double(ds.y[i * ds.dy + d]);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + csv_path);

  std::ofstream side(sidecar_path(csv_path), std::ios::binary);
  if (!side)
    throw std::runtime_error("cannot open for write: " + sidecar_path(csv_path));
  side << "{\"n\": " << ds.n << ", \"tau\": " << format_double(ds.tau)
       << ", \"seed\": " << seed << "}\n";
}

PairedDataset read_dataset_csv(const std::string& csv_path,
                               std::optional<double> tau_override) {
  std::ifstream in(csv_path);
  if (!in) throw ConfigError("cannot open dataset: " + csv_path);

  std::string header;
  do {  // skip leading comment lines
    if (!std::getline(in, header)) throw ConfigError("empty dataset file");
  } while (!header.empty() && header[0] == '#');
  int dx = 0, dy = 0;
  {
    std::stringstream hs(header);
    std::string col;
    while (std::getline(hs, col, ',')) {
      if (col.rfind('x', 0) == 0)
        ++dx;
      else if (col.rfind('y', 0) == 0)
        ++dy;
      else
        throw ConfigError("unexpected dataset column: " + col);
    }
  }
  if (dx < 1 || dy < 1) throw ConfigError("dataset header must list x*,y*");

  PairedDataset ds;
  ds.dx = dx;
  ds.dy = dy;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string field;
    int col = 0;
    while (std::getline(ls, field, ',')) {
      const double v = std::stod(field);
      if (col < dx)
        ds.x.push_back(v);
      else
        ds.y.push_back(v);
      ++col;
    }
    if (col != dx + dy) throw ConfigError("ragged dataset row: " + line);
    ++ds.n;
  }

  if (tau_override) {
    ds.tau = *tau_override;
  } else {
    std::ifstream side(sidecar_path(csv_path));
    if (!side)
      throw ConfigError("no sidecar JSON and no --tau given for " + csv_path);
    nlohmann::json j;
    side >> j;
    ds.tau = j.at("tau").get<double>();
    if (j.contains("n") && j.at("n").get<std::size_t>() != ds.n)
      throw ConfigError("sidecar n does not match CSV row count");
  }
  if (ds.tau <= 0.0) throw ConfigError("tau must be positive");
  return ds;
}

}  // namespace nuclr
