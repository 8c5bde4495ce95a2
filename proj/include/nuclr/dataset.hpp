#ifndef NUCLR_DATASET_HPP
#define NUCLR_DATASET_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nuclr/common.hpp"

namespace nuclr {

// A paired anchor/target sample {(x_i, y_i)}_{i<n} with the temperature it
// was generated under. Rows are stored flat (row-major) so hot loops can
// view columns/rows without copies; dx == dy == 2 for the synthetic world,
// higher for the bimodal toy task.
struct PairedDataset {
  std::size_t n = 0;
  int dx = 0;
  int dy = 0;
  double tau = 0.0;
  std::vector<double> x;  // n * dx
  std::vector<double> y;  // n * dy

  std::span<const double> anchor(std::size_t i) const {
    return {x.data() + i * static_cast<std::size_t>(dx),
            static_cast<std::size_t>(dx)};
  }
  std::span<const double> target(std::size_t i) const {
    return {y.data() + i * static_cast<std::size_t>(dy),
            static_cast<std::size_t>(dy)};
  }
  Vec2 anchor2(std::size_t i) const { return {x[2 * i], x[2 * i + 1]}; }
  Vec2 target2(std::size_t i) const { return {y[2 * i], y[2 * i + 1]}; }
};

// CSV layout: header x1,..,x<dx>,y1,..,y<dy>, one pair per row, 17
// significant digits. The sidecar JSON ({n, tau, seed}) lives next to the
// CSV with extension .json.
void write_dataset_csv(const std::string& csv_path, const PairedDataset& ds,
                       std::uint64_t seed);
PairedDataset read_dataset_csv(const std::string& csv_path,
                               std::optional<double> tau_override = {});

std::string sidecar_path(const std::string& csv_path);

}  // namespace nuclr

#endif  // NUCLR_DATASET_HPP
