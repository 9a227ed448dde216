#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "laya/simd/kernels.hpp"

namespace laya::simd {
namespace {

Isa detect_best() {
#if defined(LAYA_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    return __builtin_cpu_supports("avx512f") ? Isa::avx512 : Isa::avx2;
  }
#endif
  return Isa::scalar;
}

Isa initial_isa() {
  const Isa best = detect_best();
  if (const char* env = std::getenv("LAYA_SIMD"); env != nullptr && *env != '\0') {
    const std::string value(env);
    if (value == "auto") return best;
    const Isa requested = parse_isa(value);
    if (!isa_supported(requested)) {
      throw std::runtime_error("LAYA_SIMD=" + value + " is not supported on this CPU");
    }
    return requested;
  }
  return best;
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> table{&kernels_for(initial_isa())};
  return table;
}

}  // namespace

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return detect_best() != Isa::scalar;
    case Isa::avx512:
      return detect_best() == Isa::avx512;
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("ISA not supported on this CPU: " + std::string(isa_name(isa)));
  }
#if defined(LAYA_HAVE_AVX2)
  if (isa == Isa::avx2) return avx2_kernels();
  if (isa == Isa::avx512) return avx512_kernels();
#endif
  return scalar_kernels();
}

const KernelTable& kernels() { return *active_table().load(std::memory_order_acquire); }

Isa active_isa() { return kernels().isa; }

void set_isa(Isa isa) { active_table().store(&kernels_for(isa), std::memory_order_release); }

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::avx512:
      return "avx512";
  }
  return "unknown";
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  if (name == "avx512") return Isa::avx512;
  throw std::invalid_argument("unknown ISA '" + std::string(name) + "' (expected scalar, avx2 or avx512)");
}

}  // namespace laya::simd
