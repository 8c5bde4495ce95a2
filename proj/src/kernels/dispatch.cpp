#include <atomic>
#include <cstdlib>
#include <string_view>

#include "nuclr/kernels.hpp"

namespace nuclr::kern {
namespace {

std::atomic<const Kernels*> g_active{nullptr};

const Kernels* pick_by_name(std::string_view name) {
  if (name == "scalar") return &scalar_kernels();
#if defined(__x86_64__) || defined(__i386__)
  if (name == "avx2" && avx2_supported()) return &avx2_kernels();
#endif
#if defined(__aarch64__)
  if (name == "neon") return &neon_kernels();
#endif
  return nullptr;
}

const Kernels* pick_default() {
  if (const char* env = std::getenv("NUCLR_KERNELS")) {
    if (const Kernels* k = pick_by_name(env)) return k;
  }
#if defined(__x86_64__) || defined(__i386__)
  if (avx2_supported()) return &avx2_kernels();
#endif
#if defined(__aarch64__)
  return &neon_kernels();
#endif
  return &scalar_kernels();
}

}  // namespace

#if defined(__x86_64__) || defined(__i386__)
bool avx2_supported() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

const Kernels& active() {
  const Kernels* k = g_active.load(std::memory_order_acquire);
  if (!k) {
    // racing initializers all compute the same table; last store wins
    k = pick_default();
    g_active.store(k, std::memory_order_release);
  }
  return *k;
}

bool set_active(std::string_view name) {
  if (const Kernels* k = pick_by_name(name)) {
    g_active.store(k, std::memory_order_release);
    return true;
  }
  return false;
}

}  // namespace nuclr::kern
