#include "flowtraj/streamlines.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "flowtraj/sampling.hpp"
#include "flowtraj/simd/kernels.hpp"
#include "flowtraj/stats.hpp"

namespace flowtraj {

std::size_t VectorField::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

VectorField make_vector_field(FlowMap flow) {
  VectorField f{std::move(flow), {}};
  f.valid.assign(f.flow.size(), 1);
  return f;
}

void mask_field(VectorField& field, double lo, double hi, bool outlier_filter) {
  const std::size_t n = field.flow.size();
  std::vector<double> mag(n);
  simd::active().magnitudes(field.flow.u_data(), field.flow.v_data(), mag);
  std::vector<double> passing;
  for (std::size_t i = 0; i < n; ++i) {
    if (!field.valid[i] || mag[i] < lo || mag[i] > hi) {
      field.valid[i] = 0;
    } else {
      passing.push_back(mag[i]);
    }
  }
  if (outlier_filter && passing.size() >= 4) {
    // A refit constant is only constant up to rounding; treat that spread as zero.
    const double sigma = stats::stddev(passing);
    if (sigma > 1e-6 * stats::mean(passing)) {
      const OutlierBounds b = skew_chebyshev_bounds(passing);
      if (!b.degenerate) {
        for (std::size_t i = 0; i < n; ++i) {
          if (field.valid[i] && (mag[i] < b.lambda_minus || mag[i] > b.lambda_plus)) field.valid[i] = 0;
        }
      }
    }
  }
  auto u = field.flow.u_data();
  auto v = field.flow.v_data();
  for (std::size_t i = 0; i < n; ++i) {
    if (!field.valid[i]) u[i] = v[i] = 0.0f;
  }
}

VectorField build_combined_field(std::span<const FlowMap> streak_flows,
                                 std::span<const FlowSample> representation, int width, int height,
                                 const FieldBuildOptions& options) {
  if (streak_flows.empty()) throw Error(ErrorCode::EmptyInput, "no streak flows in the window");
  const FlowMap avg = average_flow(streak_flows);
  if (avg.width() != width || avg.height() != height) {
    throw Error(ErrorCode::DimensionMismatch, "streak flow size differs from the frame");
  }
  std::vector<FlowSample> samples;
  const int stride = std::max(1, options.streak_stride);
  for (int y = 0; y < height; y += stride) {
    for (int x = 0; x < width; x += stride) {
      samples.push_back({{double(x), double(y)}, avg.at(x, y)});
    }
  }
  samples.insert(samples.end(), representation.begin(), representation.end());
  DenseFit fit = fit_dense_flow(samples, width, height, options.spline, 1);
  VectorField field = make_vector_field(std::move(fit.map));
  const double hi = options.hi > 0.0 ? options.hi : 0.5 * std::min(width, height);
  mask_field(field, options.lo, hi, options.outlier_filter);
  return field;
}

const char* to_string(Termination t) noexcept {
  switch (t) {
    case Termination::Boundary: return "boundary";
    case Termination::NearOther: return "near_other";
    case Termination::CriticalPoint: return "critical_point";
    case Termination::Closed: return "closed";
    case Termination::MaxLength: return "max_length";
  }
  return "unknown";
}

namespace {

/// Points of placed streamlines bucketed on a coarse grid.
class PointIndex {
 public:
  explicit PointIndex(double cell) : cell_(cell) {}

  void add(Vec2 p, int line) { buckets_[key(p)].push_back({p, line}); }

  /// True when some point of a line other than `self` lies within r of p.
  bool near_other(Vec2 p, double r, int self) const {
    const auto cx = static_cast<long>(std::floor(p.x / cell_));
    const auto cy = static_cast<long>(std::floor(p.y / cell_));
    const long reach = static_cast<long>(std::ceil(r / cell_));
    for (long dy = -reach; dy <= reach; ++dy) {
      for (long dx = -reach; dx <= reach; ++dx) {
        auto it = buckets_.find(pack(cx + dx, cy + dy));
        if (it == buckets_.end()) continue;
        for (const auto& e : it->second) {
          if (e.line != self && distance(e.p, p) < r) return true;
        }
      }
    }
    return false;
  }

 private:
  struct Entry {
    Vec2 p;
    int line;
  };
  static long long pack(long x, long y) { return (static_cast<long long>(x) << 32) ^ (y & 0xffffffffLL); }
  long long key(Vec2 p) const {
    return pack(static_cast<long>(std::floor(p.x / cell_)), static_cast<long>(std::floor(p.y / cell_)));
  }

  double cell_;
  std::unordered_map<long long, std::vector<Entry>> buckets_;
};

class DistanceMap {
 public:
  DistanceMap(int w, int h) : w_(w), h_(h), d_(static_cast<std::size_t>(w) * h) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        d_[idx(x, y)] = std::min({double(x), double(y), double(w - 1 - x), double(h - 1 - y)});
      }
    }
  }

  void add(Vec2 p, double radius) {
    const int x0 = std::max(0, static_cast<int>(std::floor(p.x - radius)));
    const int x1 = std::min(w_ - 1, static_cast<int>(std::ceil(p.x + radius)));
    const int y0 = std::max(0, static_cast<int>(std::floor(p.y - radius)));
    const int y1 = std::min(h_ - 1, static_cast<int>(std::ceil(p.y + radius)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        double& d = d_[idx(x, y)];
        d = std::min(d, std::hypot(x - p.x, y - p.y));
      }
    }
  }

  double at(int x, int y) const { return d_[idx(x, y)]; }

 private:
  std::size_t idx(int x, int y) const { return static_cast<std::size_t>(y) * w_ + x; }
  int w_, h_;
  std::vector<double> d_;
};

struct Tracer {
  const VectorField& field;
  const SeedingOptions& opt;
  const PointIndex& index;
  double max_length;

  bool usable(Vec2 p) const {
    if (!field.flow.contains(p.x, p.y)) return false;
    const int px = static_cast<int>(std::lround(p.x)), py = static_cast<int>(std::lround(p.y));
    if (!field.valid_at(px, py)) return false;
    return norm(field.flow.sample(p.x, p.y)) >= opt.critical_magnitude;
  }

  Vec2 direction(Vec2 p, double sign) const {
    const Vec2 f = field.flow.sample(p.x, p.y);
    const double n = norm(f);
    if (n < opt.critical_magnitude) return {};
    return (sign / n) * f;
  }

  /// Follows the field from the seed; returns the points after the seed.
  std::vector<Vec2> trace(Vec2 seed, double sign, int line, Termination& why) const {
    std::vector<Vec2> pts;
    Vec2 p = seed;
    double length = 0.0;
    const double r_stop = opt.d_sep / opt.d_rat;
    const Rkf45Options rk{1e-4, 1e-6, 10000};
    while (true) {
      if (length >= max_length) {
        why = Termination::MaxLength;
        return pts;
      }
      const Vec2 q = rkf45([&](Vec2 z) { return direction(z, sign); }, p, opt.step, rk);
      if (!field.flow.contains(q.x, q.y)) {
        why = Termination::Boundary;
        return pts;
      }
      if (!usable(q) || distance(q, p) < 1e-3 * opt.step) {
        why = Termination::CriticalPoint;
        return pts;
      }
      if (index.near_other(q, r_stop, line)) {
        why = Termination::NearOther;
        return pts;
      }
      length += distance(q, p);
      pts.push_back(q);
      if (length > 4.0 * opt.d_sep && distance(q, seed) < opt.step) {
        pts.push_back(seed);
        why = Termination::Closed;
        return pts;
      }
      p = q;
    }
  }
};

}  // namespace

std::vector<Streamline> seed_and_diffuse(const VectorField& field, const SeedingOptions& options) {
  if (options.d_sep <= 0.0 || options.d_rat < 1.0) {
    throw Error(ErrorCode::InvalidArgument, "seeding needs d_sep > 0 and d_rat >= 1");
  }
  const int w = field.width(), h = field.height();
  std::vector<Streamline> out;
  if (w < 1 || h < 1 || field.valid_count() == 0) return out;

  const double max_length = options.max_length > 0.0 ? options.max_length : 4.0 * (w + h);
  PointIndex index(std::max(1.0, options.d_sep));
  DistanceMap dist(w, h);
  Tracer tracer{field, options, index, max_length};

  // Pixels that can never seed (masked or critical) are skipped once.
  std::vector<std::uint8_t> seedable(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) seedable[static_cast<std::size_t>(y) * w + x] = tracer.usable({double(x), double(y)});
  }

  int line = 0;
  while (true) {
    double best = -1.0;
    int bx = -1, by = -1;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!seedable[static_cast<std::size_t>(y) * w + x]) continue;
        const double d = dist.at(x, y);
        if (d > best) {
          best = d;
          bx = x;
          by = y;
        }
      }
    }
    if (bx < 0 || best < options.d_sep) break;

    const Vec2 seed{double(bx), double(by)};
    seedable[static_cast<std::size_t>(by) * w + bx] = 0;
    Streamline s;
    s.seed = seed;
    std::vector<Vec2> fwd = tracer.trace(seed, 1.0, line, s.termination);
    std::vector<Vec2> bwd;
    if (s.termination == Termination::Closed) {
      s.start_termination = Termination::Closed;
    } else {
      bwd = tracer.trace(seed, -1.0, line, s.start_termination);
    }
    s.points.reserve(bwd.size() + 1 + fwd.size());
    s.points.assign(bwd.rbegin(), bwd.rend());
    s.points.push_back(seed);
    s.points.insert(s.points.end(), fwd.begin(), fwd.end());

    // Distances only shrink where a new point is nearer than the current maximum.
    const bool keep = s.points.size() >= 2;
    for (const Vec2& p : s.points) {
      dist.add(p, best);
      if (keep) index.add(p, line);
    }
    if (keep) out.push_back(std::move(s));
    ++line;
  }
  return out;
}

}  // namespace flowtraj
