#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "flowtraj/common.hpp"

namespace flowtraj {

/// Dense per-pixel velocity field. Values are stored as float32 so that the
/// Middlebury container round-trips bit-exactly.
class FlowMap {
 public:
  FlowMap() = default;
  FlowMap(int width, int height);
  FlowMap(int width, int height, std::vector<float> u, std::vector<float> v);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return u_.size(); }
  bool empty() const noexcept { return u_.empty(); }

  float u(int x, int y) const { return u_[index(x, y)]; }
  float v(int x, int y) const { return v_[index(x, y)]; }
  void set(int x, int y, float u, float v) {
    u_[index(x, y)] = u;
    v_[index(x, y)] = v;
  }
  Vec2 at(int x, int y) const { return {u(x, y), v(x, y)}; }

  /// Bilinear sample at a sub-pixel position; coordinates are clamped to the
  /// pixel-centre extent [0, W-1] x [0, H-1].
  Vec2 sample(double x, double y) const;

  bool contains(double x, double y) const noexcept {
    return x >= 0.0 && y >= 0.0 && x <= width_ - 1 && y <= height_ - 1;
  }

  std::span<const float> u_data() const noexcept { return u_; }
  std::span<const float> v_data() const noexcept { return v_; }
  std::span<float> u_data() noexcept { return u_; }
  std::span<float> v_data() noexcept { return v_; }

  friend bool operator==(const FlowMap&, const FlowMap&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> u_;
  std::vector<float> v_;
};

inline constexpr float kFloSentinel = 202021.25f;

enum class NonFinitePolicy { ReplaceWithZero, Reject };

FlowMap parse_flo(std::span<const std::uint8_t> bytes,
                  NonFinitePolicy policy = NonFinitePolicy::ReplaceWithZero);
std::vector<std::uint8_t> write_flo(const FlowMap& map);

FlowMap read_flo_file(const std::filesystem::path& path,
                      NonFinitePolicy policy = NonFinitePolicy::ReplaceWithZero);
void write_flo_file(const std::filesystem::path& path, const FlowMap& map);

namespace field {
struct Uniform { double a = 0.0, b = 0.0; };
struct Vortex { double cx = 0.0, cy = 0.0, omega = 0.0; };
struct Saddle { double cx = 0.0, cy = 0.0; };
/// Top half moves at (+speed, 0), bottom half at (-speed, 0), separated by a
/// zero band of height `gap` centred on the frame.
struct TwoLane { double gap = 0.0, speed = 0.0; };
}  // namespace field

using FieldKind = std::variant<field::Uniform, field::Vortex, field::Saddle, field::TwoLane>;

FlowMap synth_field(const FieldKind& kind, int width, int height);

/// Row range [top_end, bottom_begin) of the zero band of a two-lane field.
std::pair<int, int> two_lane_band(double gap, int height);

/// Per-pixel mean of a sequence of equally sized maps.
FlowMap average_flow(std::span<const FlowMap> maps);

/// 8-bit grayscale image, used for masks and label maps (binary PGM, P5).
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

}  // namespace flowtraj
