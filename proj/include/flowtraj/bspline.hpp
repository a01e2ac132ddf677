#pragma once

#include <span>
#include <vector>

#include "flowtraj/common.hpp"

namespace flowtraj {

struct ScatteredSample {
  double x = 0.0, y = 0.0, z = 0.0;
};

/// One cubic control lattice covering the whole domain with cells_x x cells_y
/// spans, i.e. (cells_x + 3) x (cells_y + 3) control values stored row-major.
struct SplineLevel {
  int cells_x = 1, cells_y = 1;
  std::vector<double> phi;

  int stride() const noexcept { return cells_x + 3; }
  double control(int i, int j) const { return phi[static_cast<std::size_t>(j * stride() + i)]; }
};

/// Sum of cubic tensor-product B-spline levels over [0, width] x [0, height].
class SplineSurface {
 public:
  SplineSurface(double width, double height) : width_(width), height_(height) {}

  double width() const noexcept { return width_; }
  double height() const noexcept { return height_; }
  std::span<const SplineLevel> levels() const noexcept { return levels_; }
  void add_level(SplineLevel level) { levels_.push_back(std::move(level)); }

  /// Throws OutOfDomain outside the rectangle.
  double eval(double x, double y) const;

  /// Values at integer pixel positions (0..cols-1, 0..rows-1), row-major.
  /// Uses the active SIMD kernel table.
  std::vector<double> eval_grid(int cols, int rows) const;

 private:
  double width_, height_;
  std::vector<SplineLevel> levels_;
};

struct SplineFitOptions {
  int levels = 5;
  int base_cells = 1;         // 4 x 4 control points at the coarsest level
  double smoothing = 1e-2;    // thin-plate weight relative to the mean data weight
  double stiffness_floor = 1e-9;  // membrane weight keeping empty regions determined
};

/// Multilevel fit: level l solves a regularised least-squares problem for the
/// residual of levels 0..l-1 on a lattice refined 2x per level. A level that
/// fails to lower the residual sum of squares is dropped.
SplineSurface fit_surface(std::span<const ScatteredSample> samples, double width, double height,
                          const SplineFitOptions& options = {});

double fit_rmse(const SplineSurface& surface, std::span<const ScatteredSample> samples);

}  // namespace flowtraj
