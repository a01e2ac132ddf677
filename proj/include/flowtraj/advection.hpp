#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "flowtraj/bspline.hpp"
#include "flowtraj/cell_grid.hpp"
#include "flowtraj/flow_io.hpp"

namespace flowtraj {

struct Rkf45Options {
  double tolerance = 1e-4;
  double min_step = 1e-6;
  int max_steps = 10000;
};

/// Integrates dp/dt = velocity(p) from 0 to `duration` with the embedded
/// Runge-Kutta-Fehlberg 4(5) pair and adaptive step control.
template <class Velocity>
Vec2 rkf45(Velocity&& velocity, Vec2 p, double duration, const Rkf45Options& opt = {});

/// Stationary field: bilinear flow map lookup.
Vec2 advect_point(const FlowMap& field, Vec2 p, double duration, const Rkf45Options& opt = {});

struct Particle {
  Vec2 origin;
  Vec2 position;
  int birth = 0;  // mini-batch index of injection
  bool alive = true;
};

struct Streakline {
  Vec2 origin;
  std::vector<Vec2> points;  // newest particle first
};

/// Dense particle system: one injection per origin per mini-batch step.
class ParticleSystem {
 public:
  /// Origins every `stride` pixels; memory bounds the particles kept per origin.
  ParticleSystem(int width, int height, int stride, int memory_cell);

  /// Injects the first generation when empty, otherwise advances every live
  /// particle through `avg_flow` for one step and injects a new generation.
  void advect(const FlowMap& avg_flow, const Rkf45Options& opt = {});

  std::vector<Streakline> streaklines() const;

  int step() const noexcept { return step_; }
  std::span<const Particle> particles() const noexcept { return particles_; }
  std::size_t origin_count() const noexcept { return origins_.size(); }

 private:
  void inject();

  int width_, height_, memory_;
  int step_ = 0;
  std::vector<Vec2> origins_;
  std::vector<Particle> particles_;  // grouped by generation, oldest first
};

std::vector<Streakline> collect_streaklines(const ParticleSystem& system);

struct DenseFit {
  FlowMap map;
  bool insufficient = false;  // too few samples: zero map
};

struct FlowSample {
  Vec2 position;
  Vec2 displacement;
};

/// Fits each displacement component with the multilevel spline and evaluates
/// it on the pixel grid.
DenseFit fit_dense_flow(std::span<const FlowSample> samples, int width, int height,
                        const SplineFitOptions& options = {}, std::size_t min_samples = 4);

/// Streak flow: displacement samples between consecutive streakline particles.
DenseFit streak_flow(std::span<const Streakline> streaklines, int width, int height,
                     const SplineFitOptions& options = {});

std::vector<FlowSample> level_samples(const FineToCoarse& representation, RepresentationLevel level);

DenseFit interpolate_sparse(const FineToCoarse& representation, RepresentationLevel level, int width,
                            int height, const SplineFitOptions& options = {});

// ---------------------------------------------------------------------------

template <class Velocity>
Vec2 rkf45(Velocity&& velocity, Vec2 p, double duration, const Rkf45Options& opt) {
  if (duration <= 0.0) return p;
  double t = 0.0;
  double h = duration;
  int steps = 0;
  while (t < duration && steps++ < opt.max_steps) {
    h = std::min(h, duration - t);
    const Vec2 k1 = h * velocity(p);
    const Vec2 k2 = h * velocity(p + (1.0 / 4.0) * k1);
    const Vec2 k3 = h * velocity(p + (3.0 / 32.0) * k1 + (9.0 / 32.0) * k2);
    const Vec2 k4 = h * velocity(p + (1932.0 / 2197.0) * k1 - (7200.0 / 2197.0) * k2 + (7296.0 / 2197.0) * k3);
    const Vec2 k5 = h * velocity(p + (439.0 / 216.0) * k1 - 8.0 * k2 + (3680.0 / 513.0) * k3 - (845.0 / 4104.0) * k4);
    const Vec2 k6 = h * velocity(p - (8.0 / 27.0) * k1 + 2.0 * k2 - (3544.0 / 2565.0) * k3 + (1859.0 / 4104.0) * k4 -
                                 (11.0 / 40.0) * k5);
    const Vec2 y4 = p + (25.0 / 216.0) * k1 + (1408.0 / 2565.0) * k3 + (2197.0 / 4104.0) * k4 - (1.0 / 5.0) * k5;
    const Vec2 y5 = p + (16.0 / 135.0) * k1 + (6656.0 / 12825.0) * k3 + (28561.0 / 56430.0) * k4 - (9.0 / 50.0) * k5 +
                    (2.0 / 55.0) * k6;
    const double err = norm(y5 - y4);
    if (err <= opt.tolerance || h <= opt.min_step) {
      t += h;
      p = y5;
    }
    const double factor = err == 0.0 ? 4.0 : 0.84 * std::pow(opt.tolerance / err, 0.25);
    h = std::max(opt.min_step, h * std::clamp(factor, 0.1, 4.0));
  }
  return p;
}

}  // namespace flowtraj
