#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "flowtraj/flow_io.hpp"
#include "flowtraj/streamlines.hpp"

using namespace flowtraj;

namespace {

double min_cross_distance(const std::vector<Streamline>& lines) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < lines.size(); ++a) {
    for (std::size_t b = a + 1; b < lines.size(); ++b) {
      for (const auto& p : lines[a].points) {
        for (const auto& q : lines[b].points) best = std::min(best, norm(p - q));
      }
    }
  }
  return best;
}

double tangent_fraction(const VectorField& f, const std::vector<Streamline>& lines) {
  std::size_t good = 0, total = 0;
  for (const auto& l : lines) {
    for (std::size_t i = 1; i + 1 < l.points.size(); ++i) {
      const Vec2 seg = l.points[i + 1] - l.points[i - 1];
      const Vec2 v = f.flow.sample(l.points[i].x, l.points[i].y);
      if (norm(seg) == 0.0 || norm(v) == 0.0) continue;
      const double c = std::clamp(dot(seg, v) / (norm(seg) * norm(v)), -1.0, 1.0);
      ++total;
      if (std::acos(c) < 5.0 * std::numbers::pi / 180.0) ++good;
    }
  }
  return total ? static_cast<double>(good) / static_cast<double>(total) : 0.0;
}

}  // namespace

TEST(Seeding, UniformParallelLines) {
  const auto f = make_vector_field(synth_field(field::Uniform{1.0, 0.0}, 64, 48));
  const auto lines = seed_and_diffuse(f);
  ASSERT_GE(lines.size(), 5u);
  for (const auto& l : lines) {
    ASSERT_GE(l.points.size(), 2u);
    for (std::size_t i = 1; i < l.points.size(); ++i) {
      EXPECT_NEAR(l.points[i].y, l.points[0].y, 1e-6);
      EXPECT_GT(l.points[i].x, l.points[i - 1].x);
      EXPECT_LE(norm(l.points[i] - l.points[i - 1]), 1.5);
    }
  }
  std::vector<double> ys;
  for (const auto& l : lines) ys.push_back(l.points[0].y);
  std::sort(ys.begin(), ys.end());
  for (std::size_t i = 1; i < ys.size(); ++i) EXPECT_GE(ys[i] - ys[i - 1], 4.3 - 0.5);
  EXPECT_GE(tangent_fraction(f, lines), 0.95);
}

TEST(Seeding, FullyMaskedFieldYieldsNothing) {
  auto f = make_vector_field(synth_field(field::Uniform{1.0, 0.0}, 32, 32));
  std::fill(f.valid.begin(), f.valid.end(), 0);
  EXPECT_TRUE(seed_and_diffuse(f).empty());
  EXPECT_TRUE(seed_and_diffuse(make_vector_field(FlowMap(32, 32))).empty());
}

TEST(Seeding, VortexHasClosedLoop) {
  const auto f = make_vector_field(synth_field(field::Vortex{32.0, 32.0, 0.1}, 64, 64));
  const auto lines = seed_and_diffuse(f);
  bool closed = false;
  for (const auto& l : lines) {
    if (l.termination == Termination::Closed || l.start_termination == Termination::Closed) {
      closed = true;
      EXPECT_LT(norm(l.points.front() - l.points.back()), 2.0);
    }
  }
  EXPECT_TRUE(closed);
  EXPECT_GE(tangent_fraction(f, lines), 0.95);
  EXPECT_GE(min_cross_distance(lines), 4.3 / 1.3 - 1.0);
}

TEST(Seeding, SaddleSeparationAndTangency) {
  const auto f = make_vector_field(synth_field(field::Saddle{24.0, 24.0}, 48, 48));
  const auto lines = seed_and_diffuse(f);
  ASSERT_FALSE(lines.empty());
  EXPECT_GE(tangent_fraction(f, lines), 0.95);
  EXPECT_GE(min_cross_distance(lines), 4.3 / 1.3 - 1.0);
}

TEST(Seeding, Deterministic) {
  const auto f = make_vector_field(synth_field(field::Vortex{20.0, 18.0, 0.07}, 40, 36));
  const auto a = seed_and_diffuse(f);
  const auto b = seed_and_diffuse(f);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].points, b[i].points);
    EXPECT_EQ(a[i].termination, b[i].termination);
  }
}

TEST(Seeding, MaskedRegionStopsLines) {
  auto f = make_vector_field(synth_field(field::Uniform{1.0, 0.0}, 60, 30));
  for (int y = 0; y < 30; ++y) {
    for (int x = 30; x < 60; ++x) f.valid[static_cast<std::size_t>(y * 60 + x)] = 0;
  }
  for (const auto& l : seed_and_diffuse(f)) {
    for (const auto& p : l.points) EXPECT_LT(p.x, 31.0);
    EXPECT_EQ(l.termination, Termination::CriticalPoint);
  }
}

TEST(Seeding, TerminationNames) {
  EXPECT_STREQ(to_string(Termination::Boundary), "boundary");
  EXPECT_STREQ(to_string(Termination::NearOther), "near_other");
  EXPECT_STREQ(to_string(Termination::CriticalPoint), "critical_point");
  EXPECT_STREQ(to_string(Termination::Closed), "closed");
  EXPECT_STREQ(to_string(Termination::MaxLength), "max_length");
}

TEST(CombinedField, ConstantStreakFlow) {
  const std::vector<FlowMap> streak(3, synth_field(field::Uniform{1.5, -0.5}, 40, 30));
  const auto f = build_combined_field(streak, {}, 40, 30);
  EXPECT_EQ(f.valid_count(), 40u * 30u);
  for (int y = 0; y < 30; ++y) {
    for (int x = 0; x < 40; ++x) {
      EXPECT_NEAR(f.flow.u(x, y), 1.5, 1e-5);
      EXPECT_NEAR(f.flow.v(x, y), -0.5, 1e-5);
    }
  }
}

TEST(CombinedField, AllZeroIsMasked) {
  const std::vector<FlowMap> streak(2, FlowMap(30, 20));
  const auto f = build_combined_field(streak, {}, 30, 20);
  EXPECT_EQ(f.valid_count(), 0u);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 30; ++x) EXPECT_EQ(f.flow.at(x, y), (Vec2{0.0, 0.0}));
  }
}

TEST(CombinedField, StrongGroupIsLocalised) {
  const std::vector<FlowMap> streak(2, FlowMap(60, 60));
  std::vector<FlowSample> rep;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) rep.push_back({{30.0 + dx, 30.0 + dy}, {3.0, 0.0}});
  }
  const auto f = build_combined_field(streak, rep, 60, 60);
  EXPECT_TRUE(f.valid_at(30, 30));
  EXPECT_GT(f.flow.u(30, 30), 0.5);
  EXPECT_FALSE(f.valid_at(2, 2));
  EXPECT_FALSE(f.valid_at(57, 57));
  EXPECT_LT(f.valid_count(), 60u * 60u / 4u);
}

TEST(CombinedField, EmptyWindow) {
  EXPECT_THROW(build_combined_field({}, {}, 10, 10), Error);
}
