#pragma once

#include <limits>
#include <span>
#include <variant>
#include <vector>

#include "flowtraj/flow_io.hpp"

namespace flowtraj {

/// A sampled motion vector anchored at its key point.
struct FlowVector {
  double x = 0.0, y = 0.0;
  double u = 0.0, v = 0.0;
  double magnitude = 0.0;
  double theta = 0.0;  // [0, 2pi) from the positive x-axis
  int t = 0;

  static FlowVector make(double x, double y, double u, double v, int t);
};

namespace sampling {
struct Grid { int step = 1; };
struct MotionGrid { int step = 1; double min_magnitude = 0.0; };
}  // namespace sampling

using SamplingStrategy = std::variant<sampling::Grid, sampling::MotionGrid>;

std::vector<Vec2> sample_keypoints(const FlowMap& flow, const SamplingStrategy& strategy);

/// One vector per key point; the displacement is the component-wise median of
/// the K x K neighbourhood clipped to the frame.
std::vector<FlowVector> build_flow_vectors(std::span<const Vec2> points, const FlowMap& flow,
                                           int kernel, int t = 0);

std::vector<FlowVector> dual_threshold(std::span<const FlowVector> vectors, double lo,
                                       double hi = std::numeric_limits<double>::infinity());

struct OutlierBounds {
  double gamma = 0.0;
  double chi_minus = 0.0, chi_plus = 0.0;
  double rho = 0.0;
  double s_minus = 0.0, s_plus = 0.0;
  double ell_minus = 0.0, ell_plus = 0.0;
  double lambda_minus = 0.0, lambda_plus = 0.0;
  /// Set when sigma or the log-magnitude IQR is zero; the bounds then pass
  /// every sample.
  bool degenerate = false;
};

/// Skew/Chebyshev-style asymmetric bounds on a positive magnitude sample.
/// Throws InvalidArgument for n < 4 or non-positive values.
OutlierBounds skew_chebyshev_bounds(std::span<const double> magnitudes);

namespace outlier {
struct Ours {};
struct Std3 {};
struct ZScore { double k = 3.0; };
struct ModifiedZScore { double k = 3.5; };
}  // namespace outlier

using OutlierMethod =
    std::variant<outlier::Ours, outlier::Std3, outlier::ZScore, outlier::ModifiedZScore>;

struct OutlierSplit {
  std::vector<FlowVector> kept;
  std::vector<FlowVector> removed;
  bool degenerate = false;  // the method fell back to pass-all
};

OutlierSplit remove_outliers(std::span<const FlowVector> vectors, const OutlierMethod& method);

struct ClassRates {
  double tp = 0.0, tn = 0.0, fp = 0.0, fn = 0.0;
  double tb = 0.0;
  bool no_positives = false;  // TP/FN rates defaulted to 1/0
  bool no_negatives = false;  // TN/FP rates defaulted to 1/0
};

/// Scores an outlier split against a foreground mask (nonzero = foreground):
/// kept-inside is a true positive, removed-outside a true negative.
ClassRates classify_against_mask(std::span<const FlowVector> kept,
                                 std::span<const FlowVector> removed, const GrayImage& mask);

/// Vector dump: header `x,y,u,v,L,theta,t`, one row per vector.
std::string vectors_to_csv(std::span<const FlowVector> vectors);

}  // namespace flowtraj
