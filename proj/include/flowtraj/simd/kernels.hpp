#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference version and
// an AVX2 version; the active table is picked once at runtime from CPUID
// and can be overridden (tests pin each ISA to check equivalence).

#include <array>
#include <cstddef>
#include <span>

namespace flowtraj::simd {

enum class Isa { Scalar, Avx2 };

const char* to_string(Isa isa) noexcept;

/// One control lattice row set for evaluating a cubic B-spline level along a
/// fixed y. `row_coeffs` holds the lattice already contracted with the four
/// y-basis weights, so the kernel only needs the 1-D x pass.
struct SplineRow {
  std::span<const double> row_coeffs;  // cells_x + 3 entries
  int cells_x = 1;
  double domain_width = 1.0;
};

/// Per-point trajectory feature (x, y, dx, dy).
using Feature = std::array<double, 4>;

struct KernelTable {
  Isa isa;
  /// acc[i] += src[i]
  void (*accumulate)(std::span<const float> src, std::span<double> acc);
  /// dst[i] = float(acc[i] * scale)
  void (*scale_store)(std::span<const double> acc, double scale, std::span<float> dst);
  /// out[i] += spline(xs[i]) for the given row.
  void (*spline_row)(const SplineRow& row, std::span<const double> xs, std::span<double> out);
  /// out[i * b.size() + j] = |a[i] - b[j]|_2
  void (*feature_distances)(std::span<const Feature> a, std::span<const Feature> b,
                            std::span<double> out);
  /// out[i] = sqrt(u[i]^2 + v[i]^2)
  void (*magnitudes)(std::span<const float> u, std::span<const float> v, std::span<double> out);
};

bool isa_supported(Isa isa) noexcept;
Isa detect_isa() noexcept;

/// Table for an explicit ISA; falls back to scalar when unsupported.
const KernelTable& table(Isa isa) noexcept;
/// Table currently in use by the library.
const KernelTable& active() noexcept;
void set_active(Isa isa) noexcept;

namespace detail {
extern const KernelTable kScalarTable;
extern const KernelTable* const kAvx2Table;  // null when not compiled in
}  // namespace detail

}  // namespace flowtraj::simd
