#pragma once

#include <array>
#include <cmath>
#include <utility>

namespace flowtraj::simd::detail {

/// Uniform cubic B-spline basis at local parameter s in [0, 1].
inline std::array<double, 4> cubic_basis(double s) {
  const double t = 1.0 - s;
  const double s2 = s * s, s3 = s2 * s;
  return {t * t * t / 6.0, (3.0 * s3 - 6.0 * s2 + 4.0) / 6.0,
          (-3.0 * s3 + 3.0 * s2 + 3.0 * s + 1.0) / 6.0, s3 / 6.0};
}

/// Lattice cell index and local parameter for a coordinate already scaled to
/// cell units; the right edge belongs to the last cell.
inline std::pair<int, double> cell_of(double u, int cells) {
  double f = std::floor(u);
  int i = static_cast<int>(f);
  if (i >= cells) i = cells - 1;
  if (i < 0) i = 0;
  return {i, u - i};
}

}  // namespace flowtraj::simd::detail
