#include <atomic>

#include "flowtraj/simd/kernels.hpp"

namespace flowtraj::simd {
namespace {

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{&table(detect_isa())};
  return slot;
}

}  // namespace

const char* to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

bool isa_supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(__x86_64__) || defined(__i386__)
      return detail::kAvx2Table != nullptr && __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

Isa detect_isa() noexcept { return isa_supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar; }

const KernelTable& table(Isa isa) noexcept {
  if (isa == Isa::Avx2 && isa_supported(Isa::Avx2)) return *detail::kAvx2Table;
  return detail::kScalarTable;
}

const KernelTable& active() noexcept { return *active_slot().load(std::memory_order_acquire); }

void set_active(Isa isa) noexcept { active_slot().store(&table(isa), std::memory_order_release); }

}  // namespace flowtraj::simd
