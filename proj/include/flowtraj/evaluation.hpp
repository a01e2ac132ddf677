#pragma once

#include <span>
#include <string>
#include <vector>

#include "flowtraj/common.hpp"
#include "flowtraj/simd/kernels.hpp"

namespace flowtraj {

using Polyline = std::vector<Vec2>;

/// n samples uniformly spaced in chord length along a natural cubic spline
/// through the points. Endpoints are reproduced exactly.
Polyline resample(std::span<const Vec2> traj, int n);

/// (x / diag, y / diag, dx, dy) with (dx, dy) the unit direction of the
/// segment leaving each point; the last point repeats the previous direction.
std::vector<simd::Feature> features(std::span<const Vec2> traj, double diag);

enum class Metric { Euclidean, Hausdorff, Dtw, Lcs };
enum class Regularisation { ClusterThreshold, QuartileThreshold, MedianRls, LocalScalingRls };

Metric parse_metric(const std::string& name);
Regularisation parse_regularisation(const std::string& name);
const char* to_string(Metric m) noexcept;
const char* to_string(Regularisation r) noexcept;

/// Pairwise feature distances, row-major |a| x |b|.
std::vector<double> feature_distance_table(std::span<const simd::Feature> a, std::span<const simd::Feature> b);

/// Optimal alignment cost with match / insert / delete steps of unit weight.
double dtw_cost(std::span<const double> table, int n, int m);
/// Longest common subsequence length under a distance-threshold match.
int lcs_length(std::span<const double> table, int n, int m, double eps);

double traj_distance(std::span<const simd::Feature> a, std::span<const simd::Feature> b, Metric metric,
                     double lcs_eps = 0.05);

struct DistanceMatrix {
  int rows = 0, cols = 0;
  std::vector<double> d;

  double at(int r, int c) const { return d[static_cast<std::size_t>(r * cols + c)]; }
  double& at(int r, int c) { return d[static_cast<std::size_t>(r * cols + c)]; }
};

/// Raw distances between annotated (rows) and extracted (cols) trajectories;
/// each pair is resampled to the shorter point count first.
DistanceMatrix distance_matrix(std::span<const Polyline> annotated, std::span<const Polyline> extracted,
                               Metric metric, double diag, double lcs_eps = 0.05);

/// Min-max scaling into [0, 1]; a constant matrix maps to zeros.
DistanceMatrix normalise(const DistanceMatrix& m);

/// Largest value of the lowest cluster of the entries (adaptive k-means, t_c).
double lowest_cluster_max(std::span<const double> values, double t_c = 0.01);

double rls(double u, double sigma);

DistanceMatrix regularise(const DistanceMatrix& m, Regularisation method, double t_c = 0.01);

/// Minimum-cost assignment; returns the column per row, -1 where a row is
/// matched only to padding.
std::vector<int> hungarian_assign(const DistanceMatrix& m);

struct CurvePoint {
  double tau = 0.0;
  double fp_rate = 0.0;
  double fn_rate = 0.0;
  double acc_error = 0.0;
  int correct = 0;
};

std::vector<CurvePoint> fp_error_curve(const DistanceMatrix& raw, std::span<const int> assignment,
                                       std::vector<double> thresholds);

/// tau,fp_rate,acc_error rows, ascending in tau.
std::string curve_to_csv(std::span<const CurvePoint> curve);

}  // namespace flowtraj
