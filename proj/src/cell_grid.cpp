#include "flowtraj/cell_grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "flowtraj/kmeans.hpp"
#include "flowtraj/stats.hpp"

namespace flowtraj {

void VideoVolumeConfig::validate() const {
  auto require = [](bool ok, const char* field, const char* why) {
    if (!ok) throw Error(ErrorCode::Config, std::string(field) + ": " + why);
  };
  require(width >= 1, "width", "must be >= 1");
  require(height >= 1, "height", "must be >= 1");
  require(frames >= 1, "frames", "must be >= 1");
  require(cell_width >= 1 && cell_width <= width, "cell_width", "must lie in [1, width]");
  require(cell_height >= 1 && cell_height <= height, "cell_height", "must lie in [1, height]");
  require(minibatch >= 1 && minibatch <= frames, "minibatch", "must lie in [1, frames]");
  require(memory_cell >= 1, "memory", "must be >= 1");
}

Vec2 DominantGroup::displacement() const {
  return {mean_magnitude * std::cos(theta), mean_magnitude * std::sin(theta)};
}

CellGrid::CellGrid(int cols, int rows, int cell_width, int cell_height)
    : cols_(cols), rows_(rows), cell_width_(cell_width), cell_height_(cell_height) {
  if (cols < 1 || rows < 1 || cell_width < 1 || cell_height < 1) {
    throw Error(ErrorCode::InvalidArgument, "cell grid dimensions must be positive");
  }
  cells_.resize(static_cast<std::size_t>(cols) * rows);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      at(c, r).col = c;
      at(c, r).row = r;
    }
  }
}

std::pair<int, int> CellGrid::locate(double x, double y) const {
  const int c = std::clamp(static_cast<int>(std::floor(x / cell_width_)), 0, cols_ - 1);
  const int r = std::clamp(static_cast<int>(std::floor(y / cell_height_)), 0, rows_ - 1);
  return {c, r};
}

CellGrid make_grid(const VideoVolumeConfig& config) {
  return CellGrid(config.cols(), config.rows(), config.cell_width, config.cell_height);
}

void distribute(std::span<const FlowVector> vectors, CellGrid& grid) {
  for (const auto& f : vectors) {
    const auto [c, r] = grid.locate(f.x, f.y);
    grid.at(c, r).vectors.push_back(f);
  }
}

CellGrid distribute(std::span<const FlowVector> vectors, const VideoVolumeConfig& config) {
  CellGrid grid = make_grid(config);
  distribute(vectors, grid);
  return grid;
}

int orientation_bin(double theta) {
  constexpr double kWidth = 2.0 * std::numbers::pi / kOrientationBins;
  const int b = static_cast<int>(std::floor(theta / kWidth));
  return ((b % kOrientationBins) + kOrientationBins) % kOrientationBins;
}

std::vector<OrientationGroup> quantise_orientations(const Cell& cell) {
  if (cell.vectors.empty()) throw Error(ErrorCode::EmptyCell, "cell has no vectors");
  std::array<std::vector<FlowVector>, kOrientationBins> bins;
  for (const auto& f : cell.vectors) bins[static_cast<std::size_t>(orientation_bin(f.theta))].push_back(f);

  std::vector<double> counts;
  for (const auto& b : bins) counts.push_back(static_cast<double>(b.size()));
  const double med = stats::median(counts);

  std::vector<OrientationGroup> out;
  for (int b = 0; b < kOrientationBins; ++b) {
    if (counts[static_cast<std::size_t>(b)] > med) out.push_back({b, bins[static_cast<std::size_t>(b)]});
  }
  if (out.empty()) {
    for (int b = 0; b < kOrientationBins; ++b) {
      if (!bins[static_cast<std::size_t>(b)].empty()) out.push_back({b, bins[static_cast<std::size_t>(b)]});
    }
  }
  return out;
}

std::vector<DominantGroup> cluster_spatial(std::span<const FlowVector> members, double t_c) {
  if (members.empty()) return {};
  std::vector<Vec2> pts;
  pts.reserve(members.size());
  for (const auto& f : members) pts.push_back({f.x, f.y});
  const AdaptiveKMeans km = kmeans_adaptive(pts, t_c);

  struct Acc {
    Vec2 pos{};
    double s = 0.0, c = 0.0, mag = 0.0;
    int n = 0;
  };
  std::vector<Acc> acc(static_cast<std::size_t>(km.k));
  for (std::size_t i = 0; i < members.size(); ++i) {
    Acc& a = acc[static_cast<std::size_t>(km.result.labels[i])];
    a.pos += pts[i];
    a.s += std::sin(members[i].theta);
    a.c += std::cos(members[i].theta);
    a.mag += members[i].magnitude;
    ++a.n;
  }
  std::vector<DominantGroup> out;
  for (const Acc& a : acc) {
    if (a.n == 0) continue;
    const double inv = 1.0 / a.n;
    out.push_back({a.pos.x * inv, a.pos.y * inv, a.n, wrap_angle(a.s, a.c), a.mag * inv});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.n > b.n; });
  return out;
}

void quantise_and_cluster(CellGrid& grid, double t_c) {
  for (Cell& cell : grid.cells()) {
    cell.groups.clear();
    cell.representative.reset();
    if (cell.vectors.empty()) continue;
    for (const auto& og : quantise_orientations(cell)) {
      auto groups = cluster_spatial(og.members, t_c);
      cell.groups.insert(cell.groups.end(), groups.begin(), groups.end());
    }
    std::stable_sort(cell.groups.begin(), cell.groups.end(),
                     [](const auto& a, const auto& b) { return a.n > b.n; });
    if (!cell.groups.empty()) cell.representative = cell.groups.front();
  }
}

void FineToCoarse::append(const FineToCoarse& other) {
  vectors.insert(vectors.end(), other.vectors.begin(), other.vectors.end());
  groups.insert(groups.end(), other.groups.begin(), other.groups.end());
  representatives.insert(representatives.end(), other.representatives.begin(), other.representatives.end());
}

FineToCoarse fine_to_coarse(const CellGrid& grid) {
  FineToCoarse f;
  for (const Cell& cell : grid.cells()) {
    f.vectors.insert(f.vectors.end(), cell.vectors.begin(), cell.vectors.end());
    f.groups.insert(f.groups.end(), cell.groups.begin(), cell.groups.end());
    if (cell.representative) f.representatives.push_back(*cell.representative);
  }
  return f;
}

double histogram_entropy(std::span<const double> counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) {
      const double p = c / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

EntropyMap cell_entropy(const CellGrid& grid, int neighborhood) {
  if (neighborhood < 1 || neighborhood % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "entropy neighbourhood must be odd and >= 1");
  }
  const int r = neighborhood / 2;
  EntropyMap out;
  out.cols = grid.cols();
  out.rows = grid.rows();
  out.bits.assign(static_cast<std::size_t>(out.cols) * out.rows, 0.0);
  out.empty_support.assign(out.bits.size(), false);

  for (int row = 0; row < grid.rows(); ++row) {
    for (int col = 0; col < grid.cols(); ++col) {
      const Cell& self = grid.at(col, row);
      std::array<double, kOrientationBins> own{};
      for (const auto& f : self.vectors) own[static_cast<std::size_t>(orientation_bin(f.theta))] += 1.0;

      std::array<double, kOrientationBins> counts = own;
      for (int dr = -r; dr <= r; ++dr) {
        for (int dc = -r; dc <= r; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int nc = col + dc, nr = row + dr;
          if (nc < 0 || nr < 0 || nc >= grid.cols() || nr >= grid.rows()) {
            for (int b = 0; b < kOrientationBins; ++b) counts[static_cast<std::size_t>(b)] += own[static_cast<std::size_t>(b)];
            continue;
          }
          for (const auto& g : grid.at(nc, nr).groups) counts[static_cast<std::size_t>(orientation_bin(g.theta))] += 1.0;
        }
      }
      const std::size_t idx = static_cast<std::size_t>(row * out.cols + col);
      double total = 0.0;
      for (double c : counts) total += c;
      out.empty_support[idx] = total == 0.0;
      out.bits[idx] = histogram_entropy(counts);
    }
  }
  return out;
}

}  // namespace flowtraj
