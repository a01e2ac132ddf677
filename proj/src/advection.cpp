#include "flowtraj/advection.hpp"

#include <algorithm>

namespace flowtraj {

Vec2 advect_point(const FlowMap& field, Vec2 p, double duration, const Rkf45Options& opt) {
  return rkf45([&](Vec2 q) { return field.sample(q.x, q.y); }, p, duration, opt);
}

ParticleSystem::ParticleSystem(int width, int height, int stride, int memory_cell)
    : width_(width), height_(height), memory_(memory_cell) {
  if (width < 1 || height < 1 || stride < 1 || memory_cell < 1) {
    throw Error(ErrorCode::InvalidArgument, "particle system needs positive size, stride and memory");
  }
  for (int y = 0; y < height; y += stride) {
    for (int x = 0; x < width; x += stride) origins_.push_back({static_cast<double>(x), static_cast<double>(y)});
  }
}

void ParticleSystem::inject() {
  for (const Vec2& o : origins_) particles_.push_back({o, o, step_, true});
}

void ParticleSystem::advect(const FlowMap& avg_flow, const Rkf45Options& opt) {
  if (avg_flow.width() != width_ || avg_flow.height() != height_) {
    throw Error(ErrorCode::DimensionMismatch, "average flow does not cover the particle frame");
  }
  if (particles_.empty() && step_ == 0) {
    inject();
  }
  for (Particle& p : particles_) {
    if (!p.alive) continue;
    const Vec2 next = advect_point(avg_flow, p.position, 1.0, opt);
    if (!avg_flow.contains(next.x, next.y)) {
      p.alive = false;  // frozen at its last in-frame position
      continue;
    }
    p.position = next;
  }
  ++step_;
  // Keep at most `memory_` generations per origin, newest included.
  const int oldest_kept = step_ - memory_ + 1;
  std::erase_if(particles_, [&](const Particle& p) { return p.birth < oldest_kept; });
  inject();
}

std::vector<Streakline> ParticleSystem::streaklines() const {
  // Particles are appended one generation at a time in origin order, so the
  // i-th particle of every generation shares origins_[i].
  const std::size_t n = origins_.size();
  std::vector<Streakline> out;
  if (n == 0 || particles_.empty()) return out;
  const std::size_t generations = particles_.size() / n;
  for (std::size_t o = 0; o < n; ++o) {
    Streakline s;
    s.origin = origins_[o];
    for (std::size_t g = generations; g-- > 0;) {
      const Particle& p = particles_[g * n + o];
      if (p.alive) s.points.push_back(p.position);
    }
    if (s.points.size() >= 2) out.push_back(std::move(s));
  }
  return out;
}

std::vector<Streakline> collect_streaklines(const ParticleSystem& system) { return system.streaklines(); }

DenseFit fit_dense_flow(std::span<const FlowSample> samples, int width, int height,
                        const SplineFitOptions& options, std::size_t min_samples) {
  DenseFit out{FlowMap(width, height), false};
  if (samples.empty() || samples.size() < min_samples) {
    out.insufficient = true;
    return out;
  }
  const double dw = std::max(1, width - 1), dh = std::max(1, height - 1);
  std::vector<ScatteredSample> su, sv;
  su.reserve(samples.size());
  sv.reserve(samples.size());
  for (const auto& s : samples) {
    const double x = std::clamp(s.position.x, 0.0, dw), y = std::clamp(s.position.y, 0.0, dh);
    su.push_back({x, y, s.displacement.x});
    sv.push_back({x, y, s.displacement.y});
  }
  const auto gu = fit_surface(su, dw, dh, options).eval_grid(width, height);
  const auto gv = fit_surface(sv, dw, dh, options).eval_grid(width, height);
  auto u = out.map.u_data();
  auto v = out.map.v_data();
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = static_cast<float>(gu[i]);
    v[i] = static_cast<float>(gv[i]);
  }
  return out;
}

DenseFit streak_flow(std::span<const Streakline> streaklines, int width, int height,
                     const SplineFitOptions& options) {
  std::vector<FlowSample> samples;
  for (const auto& s : streaklines) {
    for (std::size_t k = 0; k + 1 < s.points.size(); ++k) {
      samples.push_back({s.points[k], s.points[k + 1] - s.points[k]});
    }
  }
  return fit_dense_flow(samples, width, height, options);
}

std::vector<FlowSample> level_samples(const FineToCoarse& representation, RepresentationLevel level) {
  std::vector<FlowSample> out;
  switch (level) {
    case RepresentationLevel::Vectors:
      for (const auto& f : representation.vectors) out.push_back({{f.x, f.y}, {f.u, f.v}});
      break;
    case RepresentationLevel::Groups:
      for (const auto& g : representation.groups) out.push_back({{g.x, g.y}, g.displacement()});
      break;
    case RepresentationLevel::Representative:
      for (const auto& g : representation.representatives) out.push_back({{g.x, g.y}, g.displacement()});
      break;
  }
  return out;
}

DenseFit interpolate_sparse(const FineToCoarse& representation, RepresentationLevel level, int width,
                            int height, const SplineFitOptions& options) {
  // A single group is still a well-posed (constant) fit.
  return fit_dense_flow(level_samples(representation, level), width, height, options, 1);
}

}  // namespace flowtraj
