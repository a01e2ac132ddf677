#pragma once

#include <optional>
#include <span>
#include <vector>

#include "flowtraj/sampling.hpp"

namespace flowtraj {

struct VideoVolumeConfig {
  int width = 0;
  int height = 0;
  int frames = 0;
  int cell_width = 15;
  int cell_height = 15;
  int minibatch = 2;
  int memory_cell = 10;

  /// Throws Config naming the offending field.
  void validate() const;
  int cols() const { return std::max(1, width / cell_width); }
  int rows() const { return std::max(1, height / cell_height); }
};

struct DominantGroup {
  double x = 0.0, y = 0.0;
  int n = 0;
  double theta = 0.0;           // circular mean orientation in [0, 2pi)
  double mean_magnitude = 0.0;  // mean member magnitude, used to rebuild a displacement

  Vec2 displacement() const;
};

struct Cell {
  int col = 0, row = 0;
  std::vector<FlowVector> vectors;
  std::vector<DominantGroup> groups;  // descending by n
  std::optional<DominantGroup> representative;
};

class CellGrid {
 public:
  CellGrid(int cols, int rows, int cell_width, int cell_height);

  int cols() const noexcept { return cols_; }
  int rows() const noexcept { return rows_; }
  int cell_width() const noexcept { return cell_width_; }
  int cell_height() const noexcept { return cell_height_; }

  Cell& at(int col, int row) { return cells_[static_cast<std::size_t>(row * cols_ + col)]; }
  const Cell& at(int col, int row) const { return cells_[static_cast<std::size_t>(row * cols_ + col)]; }
  std::span<Cell> cells() noexcept { return cells_; }
  std::span<const Cell> cells() const noexcept { return cells_; }

  /// Cell owning a pixel position; right/bottom remainders fold into the last cell.
  std::pair<int, int> locate(double x, double y) const;

 private:
  int cols_, rows_, cell_width_, cell_height_;
  std::vector<Cell> cells_;
};

CellGrid make_grid(const VideoVolumeConfig& config);

/// Adds each vector to the cell containing its start position.
void distribute(std::span<const FlowVector> vectors, CellGrid& grid);
CellGrid distribute(std::span<const FlowVector> vectors, const VideoVolumeConfig& config);

inline constexpr int kOrientationBins = 8;

int orientation_bin(double theta);

struct OrientationGroup {
  int bin = 0;
  std::vector<FlowVector> members;
};

/// 8 x 45 degree bins; keeps bins whose count is strictly above the median
/// of the eight counts (all non-empty bins when none is).
std::vector<OrientationGroup> quantise_orientations(const Cell& cell);

std::vector<DominantGroup> cluster_spatial(std::span<const FlowVector> members, double t_c);

/// Quantise + cluster every cell in place.
void quantise_and_cluster(CellGrid& grid, double t_c);

struct FineToCoarse {
  std::vector<FlowVector> vectors;
  std::vector<DominantGroup> groups;
  std::vector<DominantGroup> representatives;

  void append(const FineToCoarse& other);
};

FineToCoarse fine_to_coarse(const CellGrid& grid);

enum class RepresentationLevel { Vectors, Groups, Representative };

struct EntropyMap {
  int cols = 0, rows = 0;
  std::vector<double> bits;
  std::vector<bool> empty_support;

  double at(int col, int row) const { return bits[static_cast<std::size_t>(row * cols + col)]; }
};

/// Shannon entropy (bits) of the angular histogram built from each cell's own
/// vectors plus the groups of its K x K neighbourhood; out-of-grid neighbours
/// are replaced by copies of the cell's own vectors.
EntropyMap cell_entropy(const CellGrid& grid, int neighborhood = 3);

/// Entropy of an 8-bin count histogram in bits.
double histogram_entropy(std::span<const double> counts);

}  // namespace flowtraj
