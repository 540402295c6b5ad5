#include <atomic>
#include <cstdlib>
#include <string>

#include "imagine/core/errors.hpp"
#include "imagine/simd/kernels.hpp"

namespace imagine::simd {

namespace {

bool cpu_has_avx2() {
#if defined(IMAGINE_RL_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* detect() {
  if (const char* forced = std::getenv("IMAGINE_RL_ISA")) {
    const std::string name(forced);
    if (name == "scalar") return &scalar_kernels();
    if (name == "avx2") {
      if (auto k = kernels_for(Isa::Avx2)) return *k;
      throw ConfigError("IMAGINE_RL_ISA=avx2 requested but AVX2/FMA is unavailable");
    }
    throw ConfigError("IMAGINE_RL_ISA must be 'scalar' or 'avx2', got '" + name + "'");
  }
  if (auto k = kernels_for(Isa::Avx2)) return *k;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{detect()};
  return slot;
}

}  // namespace

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
      return cpu_has_avx2();
  }
  return false;
}

std::optional<const KernelTable*> kernels_for(Isa isa) {
  if (!isa_supported(isa)) return std::nullopt;
  switch (isa) {
    case Isa::Scalar:
      return &scalar_kernels();
    case Isa::Avx2:
#if defined(IMAGINE_RL_HAVE_AVX2)
      return &avx2_kernels();
#else
      return std::nullopt;
#endif
  }
  return std::nullopt;
}

const KernelTable& active_kernels() { return *active_slot().load(std::memory_order_acquire); }

void set_active_isa(Isa isa) {
  auto table = kernels_for(isa);
  if (!table) throw ConfigError(std::string("ISA ") + std::string(isa_name(isa)) + " is not available");
  active_slot().store(*table, std::memory_order_release);
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace imagine::simd
