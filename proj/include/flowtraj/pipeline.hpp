#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flowtraj/evaluation.hpp"
#include "flowtraj/linking.hpp"
#include "flowtraj/segmentation.hpp"

namespace flowtraj {

struct PipelineConfig {
  // flow source: two_lane, zero, uniform, vortex, saddle or flo_dir
  std::string source = "two_lane";
  std::filesystem::path flow_dir;
  int width = 128, height = 96, frames = 30;
  double lane_gap = 16.0, lane_speed = 1.0;
  double uniform_u = 1.0, uniform_v = 0.0;
  double vortex_omega = 0.05;

  int kernel = 13;
  int sampling_step = 2;
  double lo = 0.05;
  double hi = 0.0;  // 0: half the smaller frame side
  std::string outlier = "ours";

  int cell_width = 15, cell_height = 15;
  int minibatch = 2;
  int memory = 5;
  int neighborhood = 3;
  double t_c = 0.01;
  std::string representation = "groups";
  int particle_stride = 4;
  int spline_levels = 5;
  double smoothing = 1e-2;

  double d_sep = 4.3, d_rat = 1.3;
  LinkParams link;

  double stamp_radius = 4.3;
  double cos_thresh = 0.85;
  double lcs_eps = 0.05;

  std::uint64_t seed = 0;
  std::filesystem::path output = "flowtraj_out";
  std::filesystem::path annotations;
  std::filesystem::path boxes;

  std::string sweep = "none";  // none, minibatch or memory
  std::vector<int> sweep_values;

  /// Throws Config naming the offending key.
  void validate() const;
};

/// Flat `key = value` text; '#' starts a comment. Unknown keys are errors.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);
/// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const PipelineConfig& config);

/// Flow maps for every frame of the configured source.
std::vector<FlowMap> load_frames(const PipelineConfig& config);

struct Counts {
  int bp = 0, ap = 0, al = 0;
};

struct WindowResult {
  int index = 0;
  int first_batch = 0, last_batch = 0;
  std::vector<Track> tracks;
  FlowMap streak;
  EntropyMap entropy;
  bool resumed = false;
};

struct RunResult {
  std::vector<WindowResult> windows;
  std::vector<Track> trajectories;
  Counts counts;
  std::vector<std::filesystem::path> written;
};

struct RunOptions {
  bool write = true;
  bool resume = true;
  /// Stop after this many windows (simulates an interrupted run).
  std::optional<int> max_windows;
};

RunResult run_pipeline(const PipelineConfig& config, const RunOptions& options = {});

struct SweepEntry {
  int value = 0;
  RunResult result;
};

/// One run per sweep value, each under <output>/<param>_<value>, plus a
/// counts.csv summary at the top level.
std::vector<SweepEntry> run_sweep(const PipelineConfig& config, const RunOptions& options = {});

std::vector<int> default_sweep_values(const std::string& param);

struct EvaluationOutput {
  Metric metric;
  Regularisation reg;
  DistanceMatrix raw;
  std::vector<int> assignment;
  double default_tau = 0.0;
  std::vector<CurvePoint> curve;
};

EvaluationOutput evaluate(std::span<const Polyline> annotated, std::span<const Polyline> extracted, Metric metric,
                          Regularisation reg, double diag, double lcs_eps = 0.05);

/// Curve CSVs for every metric and regularisation; returns the written paths.
std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& dir, const std::string& param,
                                              std::span<const Polyline> annotated,
                                              std::span<const Polyline> extracted, double diag,
                                              double lcs_eps = 0.05);

std::string counts_csv(const std::vector<std::pair<std::string, Counts>>& rows);

struct GroundTruth {
  std::vector<Polyline> centerlines;
  std::vector<Box> boxes;
};

/// Lane centre lines (in the direction of motion) and lane boxes of the
/// two-lane synthetic scene.
GroundTruth two_lane_ground_truth(const PipelineConfig& config);

struct SegmentationResult {
  LabelMap labels;
  SegmentationScore score;
};

SegmentationResult segment_trajectories(std::span<const Track> trajectories, int width, int height,
                                        std::span<const Box> boxes, double stamp_radius, double cos_thresh);

/// DTW over the diagonal-normalised features divided by the point count.
double normalised_dtw(std::span<const Vec2> a, std::span<const Vec2> b, double diag);

}  // namespace flowtraj
