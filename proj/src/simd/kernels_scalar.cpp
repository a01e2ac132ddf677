#include <cmath>

#include "flowtraj/simd/kernels.hpp"
#include "spline_basis.hpp"

namespace flowtraj::simd {
namespace {

void accumulate_scalar(std::span<const float> src, std::span<double> acc) {
  for (std::size_t i = 0; i < src.size(); ++i) acc[i] += static_cast<double>(src[i]);
}

void scale_store_scalar(std::span<const double> acc, double scale, std::span<float> dst) {
  for (std::size_t i = 0; i < acc.size(); ++i) dst[i] = static_cast<float>(acc[i] * scale);
}

void spline_row_scalar(const SplineRow& row, std::span<const double> xs, std::span<double> out) {
  const double to_cell = row.cells_x / row.domain_width;
  for (std::size_t p = 0; p < xs.size(); ++p) {
    const auto [i, s] = detail::cell_of(xs[p] * to_cell, row.cells_x);
    const auto w = detail::cubic_basis(s);
    const double* c = row.row_coeffs.data() + i;
    out[p] += w[0] * c[0] + w[1] * c[1] + w[2] * c[2] + w[3] * c[3];
  }
}

void feature_distances_scalar(std::span<const Feature> a, std::span<const Feature> b,
                              std::span<double> out) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) {
        const double d = a[i][k] - b[j][k];
        s += d * d;
      }
      out[i * b.size() + j] = std::sqrt(s);
    }
  }
}

void magnitudes_scalar(std::span<const float> u, std::span<const float> v, std::span<double> out) {
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = u[i], b = v[i];
    out[i] = std::sqrt(a * a + b * b);
  }
}

}  // namespace

namespace detail {
const KernelTable kScalarTable{Isa::Scalar,       accumulate_scalar,        scale_store_scalar,
                               spline_row_scalar, feature_distances_scalar, magnitudes_scalar};
}  // namespace detail

}  // namespace flowtraj::simd
