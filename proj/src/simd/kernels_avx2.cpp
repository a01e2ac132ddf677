// Compiled with -mavx2 (no FMA contraction), so every kernel reproduces the
// scalar reference bit for bit: same operations in the same order.

#include <immintrin.h>

#include <cmath>

#include "flowtraj/simd/kernels.hpp"
#include "spline_basis.hpp"

namespace flowtraj::simd {
namespace {

void accumulate_avx2(std::span<const float> src, std::span<double> acc) {
  std::size_t i = 0;
  const std::size_t n = src.size();
  for (; i + 4 <= n; i += 4) {
    const __m256d s = _mm256_cvtps_pd(_mm_loadu_ps(src.data() + i));
    const __m256d a = _mm256_loadu_pd(acc.data() + i);
    _mm256_storeu_pd(acc.data() + i, _mm256_add_pd(a, s));
  }
  for (; i < n; ++i) acc[i] += static_cast<double>(src[i]);
}

void scale_store_avx2(std::span<const double> acc, double scale, std::span<float> dst) {
  std::size_t i = 0;
  const std::size_t n = acc.size();
  const __m256d k = _mm256_set1_pd(scale);
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_mul_pd(_mm256_loadu_pd(acc.data() + i), k);
    _mm_storeu_ps(dst.data() + i, _mm256_cvtpd_ps(a));
  }
  for (; i < n; ++i) dst[i] = static_cast<float>(acc[i] * scale);
}

void spline_row_avx2(const SplineRow& row, std::span<const double> xs, std::span<double> out) {
  const double to_cell = row.cells_x / row.domain_width;
  const __m256d vcell = _mm256_set1_pd(to_cell);
  const __m256d vmax = _mm256_set1_pd(static_cast<double>(row.cells_x - 1));
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d three = _mm256_set1_pd(3.0);
  const __m256d four = _mm256_set1_pd(4.0);
  const __m256d six = _mm256_set1_pd(6.0);
  const double* coeffs = row.row_coeffs.data();

  std::size_t p = 0;
  const std::size_t n = xs.size();
  for (; p + 4 <= n; p += 4) {
    const __m256d u = _mm256_mul_pd(_mm256_loadu_pd(xs.data() + p), vcell);
    __m256d fi = _mm256_floor_pd(u);
    fi = _mm256_min_pd(_mm256_max_pd(fi, zero), vmax);
    const __m256d s = _mm256_sub_pd(u, fi);
    const __m128i idx = _mm256_cvtpd_epi32(fi);

    const __m256d t = _mm256_sub_pd(one, s);
    const __m256d s2 = _mm256_mul_pd(s, s);
    const __m256d s3 = _mm256_mul_pd(s2, s);
    const __m256d w0 = _mm256_div_pd(_mm256_mul_pd(_mm256_mul_pd(t, t), t), six);
    const __m256d w1 = _mm256_div_pd(
        _mm256_add_pd(_mm256_sub_pd(_mm256_mul_pd(three, s3), _mm256_mul_pd(six, s2)), four), six);
    const __m256d w2 = _mm256_div_pd(
        _mm256_add_pd(_mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(_mm256_set1_pd(-3.0), s3),
                                                  _mm256_mul_pd(three, s2)),
                                    _mm256_mul_pd(three, s)),
                      one),
        six);
    const __m256d w3 = _mm256_div_pd(s3, six);

    const __m256d c0 = _mm256_i32gather_pd(coeffs, idx, 8);
    const __m256d c1 = _mm256_i32gather_pd(coeffs + 1, idx, 8);
    const __m256d c2 = _mm256_i32gather_pd(coeffs + 2, idx, 8);
    const __m256d c3 = _mm256_i32gather_pd(coeffs + 3, idx, 8);

    __m256d acc = _mm256_mul_pd(w0, c0);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(w1, c1));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(w2, c2));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(w3, c3));
    _mm256_storeu_pd(out.data() + p, _mm256_add_pd(_mm256_loadu_pd(out.data() + p), acc));
  }
  for (; p < n; ++p) {
    const auto [i, s] = detail::cell_of(xs[p] * to_cell, row.cells_x);
    const auto w = detail::cubic_basis(s);
    const double* c = coeffs + i;
    out[p] += w[0] * c[0] + w[1] * c[1] + w[2] * c[2] + w[3] * c[3];
  }
}

void feature_distances_avx2(std::span<const Feature> a, std::span<const Feature> b,
                            std::span<double> out) {
  alignas(32) double lanes[4];
  for (std::size_t i = 0; i < a.size(); ++i) {
    const __m256d va = _mm256_loadu_pd(a[i].data());
    for (std::size_t j = 0; j < b.size(); ++j) {
      const __m256d d = _mm256_sub_pd(va, _mm256_loadu_pd(b[j].data()));
      _mm256_store_pd(lanes, _mm256_mul_pd(d, d));
      out[i * b.size() + j] = std::sqrt(((lanes[0] + lanes[1]) + lanes[2]) + lanes[3]);
    }
  }
}

void magnitudes_avx2(std::span<const float> u, std::span<const float> v, std::span<double> out) {
  std::size_t i = 0;
  const std::size_t n = u.size();
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_cvtps_pd(_mm_loadu_ps(u.data() + i));
    const __m256d b = _mm256_cvtps_pd(_mm_loadu_ps(v.data() + i));
    const __m256d sq = _mm256_add_pd(_mm256_mul_pd(a, a), _mm256_mul_pd(b, b));
    _mm256_storeu_pd(out.data() + i, _mm256_sqrt_pd(sq));
  }
  for (; i < n; ++i) {
    const double a = u[i], b = v[i];
    out[i] = std::sqrt(a * a + b * b);
  }
}

const KernelTable kAvx2{Isa::Avx2,      accumulate_avx2,        scale_store_avx2,
                        spline_row_avx2, feature_distances_avx2, magnitudes_avx2};

}  // namespace

namespace detail {
const KernelTable* const kAvx2Table = &kAvx2;
}  // namespace detail

}  // namespace flowtraj::simd
