#include "flowtraj/kmeans.hpp"

#include <algorithm>
#include <limits>

namespace flowtraj {
namespace {

double sq(Vec2 a, Vec2 b) {
  const Vec2 d = a - b;
  return d.x * d.x + d.y * d.y;
}

int nearest(const std::vector<Vec2>& centers, Vec2 p) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c = 0; c < static_cast<int>(centers.size()); ++c) {
    const double d = sq(centers[c], p);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::size_t distinct_count(std::span<const Vec2> points, std::size_t cap) {
  std::vector<Vec2> seen;
  for (const Vec2& p : points) {
    if (std::find(seen.begin(), seen.end(), p) == seen.end()) {
      seen.push_back(p);
      if (seen.size() >= cap) break;
    }
  }
  return seen.size();
}

// Adds the point farthest from its assigned centre as a new centre.
std::vector<Vec2> grow(std::span<const Vec2> points, const KMeansResult& r) {
  std::size_t far = 0;
  double far_d = -1.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = sq(points[i], r.centers[static_cast<std::size_t>(r.labels[i])]);
    if (d > far_d) {
      far_d = d;
      far = i;
    }
  }
  auto centers = r.centers;
  centers.push_back(points[far]);
  return centers;
}

KMeansResult single_cluster(std::span<const Vec2> points) {
  Vec2 c{};
  for (const Vec2& p : points) c += p;
  c *= 1.0 / static_cast<double>(points.size());
  return kmeans(points, {c});
}

}  // namespace

KMeansResult kmeans(std::span<const Vec2> points, std::vector<Vec2> centers, int max_iter) {
  if (points.empty() || centers.empty()) throw Error(ErrorCode::EmptyInput, "kmeans needs points and centres");
  KMeansResult r;
  r.labels.assign(points.size(), -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const int c = nearest(centers, points[i]);
      if (c != r.labels[i]) {
        r.labels[i] = c;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<Vec2> sum(centers.size());
    std::vector<std::size_t> count(centers.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      sum[static_cast<std::size_t>(r.labels[i])] += points[i];
      ++count[static_cast<std::size_t>(r.labels[i])];
    }
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (count[c] > 0) centers[c] = sum[c] * (1.0 / static_cast<double>(count[c]));
    }
  }
  r.centers = std::move(centers);
  r.compactness = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    r.compactness += sq(points[i], r.centers[static_cast<std::size_t>(r.labels[i])]);
  }
  return r;
}

AdaptiveKMeans kmeans_adaptive(std::span<const Vec2> points, double t_c, int k_max) {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "kmeans_adaptive needs points");
  if (!(t_c > 0.0 && t_c < 1.0)) throw Error(ErrorCode::InvalidArgument, "t_c must lie in (0, 1)");
  const int k_cap = static_cast<int>(distinct_count(points, static_cast<std::size_t>(std::max(k_max, 1))));

  AdaptiveKMeans out;
  out.result = single_cluster(points);
  out.k = 1;
  out.compactness_by_k.push_back(out.result.compactness);
  const double total = out.result.compactness;
  if (total == 0.0) return out;

  while (out.k < k_cap) {
    KMeansResult next = kmeans(points, grow(points, out.result));
    out.compactness_by_k.push_back(next.compactness);
    const double gain = out.result.compactness - next.compactness;
    if (gain < t_c * total) break;
    out.result = std::move(next);
    ++out.k;
  }
  return out;
}

std::vector<double> compactness_schedule(std::span<const Vec2> points, int k_max) {
  std::vector<double> out;
  if (points.empty()) return out;
  KMeansResult r = single_cluster(points);
  out.push_back(r.compactness);
  const int k_cap = static_cast<int>(distinct_count(points, static_cast<std::size_t>(std::max(k_max, 1))));
  for (int k = 2; k <= k_cap; ++k) {
    r = kmeans(points, grow(points, r));
    out.push_back(r.compactness);
  }
  return out;
}

}  // namespace flowtraj
