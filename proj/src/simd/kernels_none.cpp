// Linked instead of kernels_avx2.cpp on targets without AVX2 support.
#include "flowtraj/simd/kernels.hpp"

namespace flowtraj::simd::detail {
const KernelTable* const kAvx2Table = nullptr;
}
