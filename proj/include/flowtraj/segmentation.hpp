#pragma once

#include <span>
#include <vector>

#include "flowtraj/evaluation.hpp"
#include "flowtraj/streamlines.hpp"

namespace flowtraj {

/// Directions of resampled trajectory segments stamped at their midpoints,
/// densified by the spline fit; pixels farther than `radius` from every
/// midpoint are masked.
VectorField traj_to_flow(std::span<const Polyline> trajectories, int width, int height, double radius = 2.0,
                         const SplineFitOptions& options = {});

struct LabelMap {
  int width = 0, height = 0;
  std::vector<int> labels;  // 0 for masked pixels, contiguous from 1
  int count = 0;

  int at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

/// 8-connected components joining neighbours whose directions have cosine
/// similarity of at least `cos_thresh`.
LabelMap segment(const VectorField& field, double cos_thresh = 0.85);

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct Box {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

struct SegmentationScore {
  int correct = 0, incorrect = 0, missed = 0;
  friend bool operator==(const SegmentationScore&, const SegmentationScore&) = default;
};

SegmentationScore score_segmentation(const LabelMap& labels, std::span<const Box> boxes);

/// Label ids scaled into 8-bit gray levels.
GrayImage label_image(const LabelMap& labels);

}  // namespace flowtraj
