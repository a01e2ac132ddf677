#pragma once

#include <span>
#include <vector>

#include "flowtraj/common.hpp"

namespace flowtraj {

struct KMeansResult {
  std::vector<Vec2> centers;
  std::vector<int> labels;
  double compactness = 0.0;  // sum of squared distances to the assigned centre
};

/// Lloyd iterations from the given initial centres until assignments settle.
KMeansResult kmeans(std::span<const Vec2> points, std::vector<Vec2> centers, int max_iter = 100);

struct AdaptiveKMeans {
  KMeansResult result;
  int k = 0;
  std::vector<double> compactness_by_k;  // C_1, C_2, ... as evaluated
};

/// Grows k one centre at a time (the new centre is the point farthest from
/// its current centre, so C_k is non-increasing) and stops once the extra
/// centre removes less than `t_c` of the one-cluster scatter C_1.
AdaptiveKMeans kmeans_adaptive(std::span<const Vec2> points, double t_c, int k_max = 32);

/// Same growth schedule evaluated to a fixed k; exposed for monotonicity checks.
std::vector<double> compactness_schedule(std::span<const Vec2> points, int k_max);

}  // namespace flowtraj
