#include "flowtraj/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace flowtraj {

VectorField traj_to_flow(std::span<const Polyline> trajectories, int width, int height, double radius,
                         const SplineFitOptions& options) {
  std::vector<FlowSample> samples;
  for (const auto& t : trajectories) {
    if (t.size() < 2) continue;
    double length = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) length += distance(t[i], t[i - 1]);
    const int n = std::max(2, static_cast<int>(std::ceil(length)) + 1);
    const Polyline r = resample(t, n);
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
      const Vec2 seg = r[i + 1] - r[i];
      const double len = norm(seg);
      if (len == 0.0) continue;
      samples.push_back({0.5 * (r[i] + r[i + 1]), (1.0 / len) * seg});
    }
  }
  VectorField field = make_vector_field(fit_dense_flow(samples, width, height, options, 1).map);
  std::fill(field.valid.begin(), field.valid.end(), std::uint8_t{0});
  for (const auto& s : samples) {
    const int x0 = std::max(0, static_cast<int>(std::floor(s.position.x - radius)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(s.position.x + radius)));
    const int y0 = std::max(0, static_cast<int>(std::floor(s.position.y - radius)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(s.position.y + radius)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        if (std::hypot(x - s.position.x, y - s.position.y) <= radius) {
          field.valid[static_cast<std::size_t>(y) * width + x] = 1;
        }
      }
    }
  }
  auto u = field.flow.u_data();
  auto v = field.flow.v_data();
  for (std::size_t i = 0; i < field.valid.size(); ++i) {
    if (!field.valid[i]) u[i] = v[i] = 0.0f;
  }
  return field;
}

namespace {

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

}  // namespace

LabelMap segment(const VectorField& field, double cos_thresh) {
  const int w = field.width(), h = field.height();
  LabelMap out{w, h, std::vector<int>(static_cast<std::size_t>(w) * h, 0), 0};
  DisjointSet ds(out.labels.size());
  auto joins = [&](int ax, int ay, int bx, int by) {
    if (!field.valid_at(bx, by)) return false;
    const Vec2 a = field.flow.at(ax, ay), b = field.flow.at(bx, by);
    const double na = norm(a), nb = norm(b);
    if (na == 0.0 || nb == 0.0) return false;
    return dot(a, b) / (na * nb) >= cos_thresh;
  };
  // Forward half of the 8-neighbourhood visits every pair once.
  constexpr int kOffsets[4][2] = {{1, 0}, {-1, 1}, {0, 1}, {1, 1}};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!field.valid_at(x, y)) continue;
      for (const auto& o : kOffsets) {
        const int nx = x + o[0], ny = y + o[1];
        if (nx < 0 || nx >= w || ny >= h) continue;
        if (joins(x, y, nx, ny)) ds.unite(y * w + x, ny * w + nx);
      }
    }
  }
  std::vector<int> id(out.labels.size(), 0);
  for (int i = 0; i < w * h; ++i) {
    if (!field.valid[static_cast<std::size_t>(i)]) continue;
    const int root = ds.find(i);
    if (id[static_cast<std::size_t>(root)] == 0) id[static_cast<std::size_t>(root)] = ++out.count;
    out.labels[static_cast<std::size_t>(i)] = id[static_cast<std::size_t>(root)];
  }
  return out;
}

SegmentationScore score_segmentation(const LabelMap& labels, std::span<const Box> boxes) {
  const std::size_t nb = boxes.size();
  const std::size_t nl = static_cast<std::size_t>(labels.count) + 1;
  // hist[b][l]: pixels of label l inside box b.
  std::vector<std::vector<long>> hist(nb, std::vector<long>(nl, 0));
  std::vector<long> area(nb, 0);
  for (std::size_t b = 0; b < nb; ++b) {
    const Box& bx = boxes[b];
    for (int y = std::max(0, bx.y0); y < std::min(labels.height, bx.y1); ++y) {
      for (int x = std::max(0, bx.x0); x < std::min(labels.width, bx.x1); ++x) {
        ++area[b];
        ++hist[b][static_cast<std::size_t>(labels.at(x, y))];
      }
    }
  }
  std::vector<int> owner(nl, -1);
  for (std::size_t l = 1; l < nl; ++l) {
    long best = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      if (hist[b][l] > best) {
        best = hist[b][l];
        owner[l] = static_cast<int>(b);
      }
    }
  }
  SegmentationScore s;
  for (std::size_t b = 0; b < nb; ++b) {
    const long unmasked = area[b] - hist[b][0];
    if (area[b] == 0 || unmasked < 0.1 * static_cast<double>(area[b])) {
      ++s.missed;
      continue;
    }
    std::size_t top = 1;
    for (std::size_t l = 2; l < nl; ++l) {
      if (hist[b][l] > hist[b][top]) top = l;
    }
    const bool dominant = 2 * hist[b][top] >= unmasked;
    if (dominant && owner[top] == static_cast<int>(b)) {
      ++s.correct;
    } else {
      ++s.incorrect;
    }
  }
  return s;
}

GrayImage label_image(const LabelMap& labels) {
  GrayImage img{labels.width, labels.height, std::vector<std::uint8_t>(labels.labels.size(), 0)};
  if (labels.count == 0) return img;
  for (std::size_t i = 0; i < labels.labels.size(); ++i) {
    const int l = labels.labels[i];
    img.pixels[i] = l == 0 ? 0 : static_cast<std::uint8_t>(std::min(255, 255 * l / labels.count));
  }
  return img;
}

}  // namespace flowtraj
