#ifndef NUCLR_COMMON_HPP
#define NUCLR_COMMON_HPP

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nuclr {

using Vec2 = std::array<double, 2>;

// Invalid user-facing configuration (bad flag values, malformed files).
// The CLI maps this to exit code 2.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// An iterative routine failed to reach its tolerance. Exit code 3.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double dot2(const Vec2& a, const Vec2& b) {
  return a[0] * b[0] + a[1] * b[1];
}

// 64-bit FNV-1a over bytes; used to bind CSV outputs to their configs.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Canonical decimal formatting for CSV/JSON payloads: 17 significant
// digits, enough to round-trip any binary64 value.
std::string format_double(double v);

std::string hex64(std::uint64_t v);

}  // namespace nuclr

#endif  // NUCLR_COMMON_HPP
