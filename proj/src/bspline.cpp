#include "flowtraj/bspline.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>

#include "flowtraj/simd/kernels.hpp"
#include "simd/spline_basis.hpp"

namespace flowtraj {
namespace {

using simd::detail::cell_of;
using simd::detail::cubic_basis;

struct Stencil {
  int i = 0, j = 0;
  std::array<double, 4> wx{}, wy{};
};

Stencil stencil(double x, double y, int cells_x, int cells_y, double width, double height) {
  Stencil s;
  const auto [i, sx] = cell_of(x * cells_x / width, cells_x);
  const auto [j, sy] = cell_of(y * cells_y / height, cells_y);
  s.i = i;
  s.j = j;
  s.wx = cubic_basis(sx);
  s.wy = cubic_basis(sy);
  return s;
}

double eval_level(const SplineLevel& lv, double x, double y, double width, double height) {
  const Stencil s = stencil(x, y, lv.cells_x, lv.cells_y, width, height);
  double z = 0.0;
  for (int l = 0; l < 4; ++l) {
    double row = 0.0;
    for (int k = 0; k < 4; ++k) row += s.wx[static_cast<std::size_t>(k)] * lv.control(s.i + k, s.j + l);
    z += s.wy[static_cast<std::size_t>(l)] * row;
  }
  return z;
}

// Adds w * (D phi)^T (D phi) for a difference stencil given as (offset, coeff) pairs.
void add_difference_penalty(Eigen::MatrixXd& ata, int nx, int ny, double w,
                            std::span<const std::array<int, 3>> taps, int span_x, int span_y) {
  for (int j = 0; j + span_y < ny; ++j) {
    for (int i = 0; i + span_x < nx; ++i) {
      for (const auto& a : taps) {
        const int ia = (j + a[1]) * nx + (i + a[0]);
        for (const auto& b : taps) {
          const int ib = (j + b[1]) * nx + (i + b[0]);
          ata(ia, ib) += w * a[2] * b[2];
        }
      }
    }
  }
}

SplineLevel solve_level(std::span<const ScatteredSample> samples, std::span<const double> residual,
                        int cells, double width, double height, const SplineFitOptions& opt) {
  SplineLevel lv;
  lv.cells_x = cells;
  lv.cells_y = cells;
  const int nx = cells + 3, ny = cells + 3, n = nx * ny;
  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd atb = Eigen::VectorXd::Zero(n);

  std::array<int, 16> idx{};
  std::array<double, 16> w{};
  for (std::size_t p = 0; p < samples.size(); ++p) {
    const Stencil s = stencil(samples[p].x, samples[p].y, cells, cells, width, height);
    for (int l = 0; l < 4; ++l) {
      for (int k = 0; k < 4; ++k) {
        const auto q = static_cast<std::size_t>(l * 4 + k);
        idx[q] = (s.j + l) * nx + (s.i + k);
        w[q] = s.wx[static_cast<std::size_t>(k)] * s.wy[static_cast<std::size_t>(l)];
      }
    }
    for (std::size_t a = 0; a < 16; ++a) {
      atb(idx[a]) += w[a] * residual[p];
      for (std::size_t b = 0; b < 16; ++b) ata(idx[a], idx[b]) += w[a] * w[b];
    }
  }

  const double scale = std::max(ata.trace() / n, 1e-300);
  // Thin-plate energy: its null space is the affine functions, so planes are
  // reproduced exactly; the small membrane term pins down data-free regions.
  static constexpr std::array<std::array<int, 3>, 3> kDxx{{{0, 0, 1}, {1, 0, -2}, {2, 0, 1}}};
  static constexpr std::array<std::array<int, 3>, 3> kDyy{{{0, 0, 1}, {0, 1, -2}, {0, 2, 1}}};
  static constexpr std::array<std::array<int, 3>, 4> kDxy{{{0, 0, 1}, {1, 0, -1}, {0, 1, -1}, {1, 1, 1}}};
  static constexpr std::array<std::array<int, 3>, 2> kDx{{{0, 0, -1}, {1, 0, 1}}};
  static constexpr std::array<std::array<int, 3>, 2> kDy{{{0, 0, -1}, {0, 1, 1}}};
  const double tp = opt.smoothing * scale;
  const double mem = opt.stiffness_floor * scale;
  add_difference_penalty(ata, nx, ny, tp, kDxx, 2, 0);
  add_difference_penalty(ata, nx, ny, tp, kDyy, 0, 2);
  add_difference_penalty(ata, nx, ny, 2.0 * tp, kDxy, 1, 1);
  add_difference_penalty(ata, nx, ny, mem, kDx, 1, 0);
  add_difference_penalty(ata, nx, ny, mem, kDy, 0, 1);

  Eigen::LDLT<Eigen::MatrixXd> ldlt(ata);
  Eigen::VectorXd phi = ldlt.solve(atb);
  lv.phi.assign(phi.data(), phi.data() + n);
  for (double& c : lv.phi) {
    if (!std::isfinite(c)) c = 0.0;
  }
  return lv;
}

}  // namespace

double SplineSurface::eval(double x, double y) const {
  constexpr double kSlack = 1e-9;
  if (!(x >= -kSlack && x <= width_ + kSlack && y >= -kSlack && y <= height_ + kSlack)) {
    throw Error(ErrorCode::OutOfDomain, "evaluation point outside spline domain");
  }
  x = std::clamp(x, 0.0, width_);
  y = std::clamp(y, 0.0, height_);
  double z = 0.0;
  for (const auto& lv : levels_) z += eval_level(lv, x, y, width_, height_);
  return z;
}

std::vector<double> SplineSurface::eval_grid(int cols, int rows) const {
  std::vector<double> out(static_cast<std::size_t>(cols) * rows, 0.0);
  std::vector<double> xs(static_cast<std::size_t>(cols));
  for (int c = 0; c < cols; ++c) xs[static_cast<std::size_t>(c)] = std::min(static_cast<double>(c), width_);
  const auto& kernels = simd::active();
  std::vector<double> coeffs;
  for (const auto& lv : levels_) {
    coeffs.resize(static_cast<std::size_t>(lv.stride()));
    for (int r = 0; r < rows; ++r) {
      const double y = std::min(static_cast<double>(r), height_);
      const auto [j, sy] = cell_of(y * lv.cells_y / height_, lv.cells_y);
      const auto wy = cubic_basis(sy);
      for (int i = 0; i < lv.stride(); ++i) {
        double c = 0.0;
        for (int l = 0; l < 4; ++l) c += wy[static_cast<std::size_t>(l)] * lv.control(i, j + l);
        coeffs[static_cast<std::size_t>(i)] = c;
      }
      simd::SplineRow row{coeffs, lv.cells_x, width_};
      kernels.spline_row(row, xs, std::span<double>(out).subspan(static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)));
    }
  }
  return out;
}

SplineSurface fit_surface(std::span<const ScatteredSample> samples, double width, double height,
                          const SplineFitOptions& options) {
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "spline fit needs at least one sample");
  if (options.levels < 1 || options.base_cells < 1) {
    throw Error(ErrorCode::InvalidArgument, "spline fit needs levels >= 1 and base_cells >= 1");
  }
  if (!(width > 0.0 && height > 0.0)) throw Error(ErrorCode::InvalidArgument, "empty spline domain");
  for (const auto& s : samples) {
    if (!(s.x >= 0.0 && s.x <= width && s.y >= 0.0 && s.y <= height) || !std::isfinite(s.z)) {
      throw Error(ErrorCode::OutOfDomain, "scattered sample outside domain or non-finite");
    }
  }

  SplineSurface surface(width, height);
  std::vector<double> residual(samples.size());
  for (std::size_t p = 0; p < samples.size(); ++p) residual[p] = samples[p].z;
  double sse = 0.0;
  for (double r : residual) sse += r * r;

  int cells = options.base_cells;
  for (int level = 0; level < options.levels; ++level, cells *= 2) {
    SplineLevel lv = solve_level(samples, residual, cells, width, height, options);
    std::vector<double> next(samples.size());
    double next_sse = 0.0;
    for (std::size_t p = 0; p < samples.size(); ++p) {
      next[p] = residual[p] - eval_level(lv, samples[p].x, samples[p].y, width, height);
      next_sse += next[p] * next[p];
    }
    if (level > 0 && !(next_sse < sse)) continue;
    residual = std::move(next);
    sse = next_sse;
    surface.add_level(std::move(lv));
  }
  return surface;
}

double fit_rmse(const SplineSurface& surface, std::span<const ScatteredSample> samples) {
  if (samples.empty()) return 0.0;
  double s = 0.0;
  for (const auto& p : samples) {
    const double d = surface.eval(p.x, p.y) - p.z;
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(samples.size()));
}

}  // namespace flowtraj
