#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flowtraj/advection.hpp"

namespace flowtraj {

/// Dense field with a per-pixel validity mask; invalid pixels hold zero.
struct VectorField {
  FlowMap flow;
  std::vector<std::uint8_t> valid;

  int width() const noexcept { return flow.width(); }
  int height() const noexcept { return flow.height(); }
  bool valid_at(int x, int y) const { return valid[static_cast<std::size_t>(y) * flow.width() + x] != 0; }
  std::size_t valid_count() const;
};

/// Marks every pixel valid.
VectorField make_vector_field(FlowMap flow);

struct FieldBuildOptions {
  SplineFitOptions spline;
  int streak_stride = 3;       // streak flow is resampled every `streak_stride` px before the refit
  double lo = 0.05;            // dual threshold, px/step
  double hi = 0.0;             // 0 selects 0.5 * min(W, H)
  bool outlier_filter = true;
};

/// Averages the window's streak flows, superimposes the representation
/// samples, refits both components and masks pixels rejected by the
/// magnitude filters.
VectorField build_combined_field(std::span<const FlowMap> streak_flows,
                                 std::span<const FlowSample> representation, int width, int height,
                                 const FieldBuildOptions& options = {});

/// Applies the dual threshold and outlier bounds to per-pixel magnitudes.
void mask_field(VectorField& field, double lo, double hi, bool outlier_filter);

enum class Termination { Boundary, NearOther, CriticalPoint, Closed, MaxLength };

const char* to_string(Termination t) noexcept;

struct Streamline {
  std::vector<Vec2> points;  // ordered along the field direction
  Vec2 seed;
  Termination termination = Termination::MaxLength;        // forward end
  Termination start_termination = Termination::MaxLength;  // backward end
};

struct SeedingOptions {
  double d_sep = 4.3;
  double d_rat = 1.3;
  double step = 1.0;
  double critical_magnitude = 1e-3;
  double max_length = 0.0;  // 0 selects 4 * (W + H)
};

/// Farthest-point seeding: seeds at the valid pixel farthest from the
/// boundary and all placed streamlines while that distance is at least d_sep,
/// integrating each seed both ways through the normalised field.
std::vector<Streamline> seed_and_diffuse(const VectorField& field, const SeedingOptions& options = {});

}  // namespace flowtraj
