#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "flowtraj/flow_io.hpp"
#include "flowtraj/sampling.hpp"
#include "flowtraj/stats.hpp"

using namespace flowtraj;

namespace {

std::vector<double> load_column(const std::string& name) {
  std::ifstream in(std::filesystem::path(FLOWTRAJ_TEST_DATA) / name);
  std::vector<double> xs;
  double x = 0.0;
  while (in >> x) xs.push_back(x);
  return xs;
}

std::vector<FlowVector> from_magnitudes(std::span<const double> mags) {
  std::vector<FlowVector> out;
  for (std::size_t i = 0; i < mags.size(); ++i) {
    out.push_back(FlowVector::make(static_cast<double>(i), 0.0, mags[i], 0.0, 0));
  }
  return out;
}

std::vector<double> kept_magnitudes(const OutlierSplit& s) {
  std::vector<double> m;
  for (const auto& f : s.kept) m.push_back(f.magnitude);
  return m;
}

}  // namespace

TEST(Keypoints, GridCounts) {
  const FlowMap m = synth_field(field::Uniform{1.0, 0.0}, 10, 10);
  EXPECT_EQ(sample_keypoints(m, sampling::Grid{1}).size(), 100u);
  const auto pts = sample_keypoints(m, sampling::Grid{3});
  EXPECT_EQ(pts.size(), 9u);
  EXPECT_EQ(pts.front(), (Vec2{1.0, 1.0}));
  EXPECT_EQ(pts.back(), (Vec2{7.0, 7.0}));
  EXPECT_EQ(sample_keypoints(synth_field(field::Uniform{1.0, 0.0}, 8, 8), sampling::Grid{4}).size(), 4u);
  EXPECT_TRUE(sample_keypoints(FlowMap(8, 8), sampling::MotionGrid{1, 0.5}).empty());
  EXPECT_EQ(sample_keypoints(m, sampling::MotionGrid{1, 0.5}).size(), 100u);
  EXPECT_THROW(sample_keypoints(m, sampling::Grid{0}), Error);
}

TEST(Keypoints, MotionGridDropsStaticPixels) {
  const FlowMap m = synth_field(field::TwoLane{10.0, 1.0}, 20, 30);
  const auto pts = sample_keypoints(m, sampling::MotionGrid{1, 0.5});
  const auto [top_end, bottom_begin] = two_lane_band(10.0, 30);
  EXPECT_EQ(pts.size(), static_cast<std::size_t>(20 * (30 - (bottom_begin - top_end))));
  for (const auto& p : pts) EXPECT_TRUE(p.y < top_end || p.y >= bottom_begin);
}

TEST(FlowVectors, MedianOfNineElements) {
  FlowMap m(3, 3);
  const double us[9] = {5, 1, 9, 3, 7, 2, 8, 4, 6};
  for (int i = 0; i < 9; ++i) {
    m.set(i % 3, i / 3, us[i], -us[i]);
  }
  const std::vector<Vec2> p{{1.0, 1.0}};
  const auto v = build_flow_vectors(p, m, 3, 4);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].u, 5.0);
  EXPECT_EQ(v[0].v, -5.0);
  EXPECT_EQ(v[0].t, 4);
  EXPECT_DOUBLE_EQ(v[0].magnitude, std::hypot(5.0, 5.0));
  EXPECT_NEAR(v[0].theta, 7.0 * std::numbers::pi / 4.0, 1e-12);
  EXPECT_THROW(build_flow_vectors(p, m, 2), Error);
}

TEST(FlowVectors, KernelOneIsIdentity) {
  const FlowMap m = synth_field(field::Vortex{4, 4, 0.5}, 9, 9);
  const auto pts = sample_keypoints(m, sampling::Grid{1});
  const auto v = build_flow_vectors(pts, m, 1);
  for (const auto& f : v) {
    EXPECT_EQ(f.u, m.u(int(f.x), int(f.y)));
    EXPECT_EQ(f.v, m.v(int(f.x), int(f.y)));
  }
}

TEST(FlowVectors, ThetaRange) {
  for (double a = 0.0; a < 2 * std::numbers::pi; a += 0.1) {
    const auto f = FlowVector::make(0, 0, std::cos(a), std::sin(a), 0);
    EXPECT_GE(f.theta, 0.0);
    EXPECT_LT(f.theta, 2 * std::numbers::pi);
    EXPECT_NEAR(f.theta, a, 1e-9);
  }
}

TEST(DualThreshold, Examples) {
  const std::vector<double> mags{0.05, 0.1, 1.0, 10.0, 50.0};
  const auto v = from_magnitudes(mags);
  EXPECT_EQ(dual_threshold(v, 0.1, 10.0).size(), 3u);
  const auto all = dual_threshold(v, 0.0);
  EXPECT_EQ(all.size(), 5u);
  EXPECT_THROW(dual_threshold(v, 20.0, 10.0), Error);
  EXPECT_THROW(dual_threshold(v, -1.0, 10.0), Error);
}

TEST(SkewChebyshev, LognormalOracle) {
  const auto mags = load_column("lognormal_1000.txt");
  ASSERT_EQ(mags.size(), 1000u);
  const OutlierBounds b = skew_chebyshev_bounds(mags);
  EXPECT_FALSE(b.degenerate);
  EXPECT_NEAR(b.gamma, 0.20748876991091816, 1e-12);
  EXPECT_GT(b.gamma, 0.0);
  EXPECT_NEAR(b.chi_minus, 0.20748876991091816, 1e-12);
  EXPECT_EQ(b.chi_plus, 0.0);
  EXPECT_NEAR(b.rho, 0.0, 1e-12);
  EXPECT_NEAR(b.lambda_minus, 0.19677010571670103, 1e-12);
  EXPECT_NEAR(b.lambda_plus, 3.6176854447908124, 1e-12);
  EXPECT_GE(b.lambda_minus, *std::min_element(mags.begin(), mags.end()));
  EXPECT_EQ(b.lambda_plus, *std::max_element(mags.begin(), mags.end()));
}

TEST(SkewChebyshev, RhoPositiveTightensLowerBound) {
  // The median bin is not the modal bin here, so the lower bound moves inwards.
  std::vector<double> mags;
  for (int i = 0; i < 30; ++i) mags.push_back(1.0);
  mags.push_back(5.0);
  for (int i = 0; i < 30; ++i) mags.push_back(5.5 + 0.5 * i);
  const OutlierBounds b = skew_chebyshev_bounds(mags);
  ASSERT_FALSE(b.degenerate);
  EXPECT_GT(b.gamma, 0.0);
  EXPECT_GT(b.rho, 0.0);
  EXPECT_LE(b.rho, 1.0);
  EXPECT_GT(b.lambda_minus, 1.0);
  EXPECT_DOUBLE_EQ(b.lambda_plus, 20.0);
  EXPECT_DOUBLE_EQ(b.lambda_minus, 1.0 + stats::stddev(mags) * b.rho * b.gamma);
}

TEST(SkewChebyshev, SymmetricSampleKeepsEverything) {
  const std::vector<double> mags{1, 2, 3, 4, 5, 6, 7};
  const auto b = skew_chebyshev_bounds(mags);
  EXPECT_EQ(b.gamma, 0.0);
  EXPECT_EQ(b.lambda_minus, 1.0);
  EXPECT_EQ(b.lambda_plus, 7.0);
  const auto split = remove_outliers(from_magnitudes(mags), outlier::Ours{});
  EXPECT_TRUE(split.removed.empty());
  EXPECT_EQ(split.kept.size(), 7u);
}

TEST(SkewChebyshev, Degenerate) {
  const std::vector<double> flat(10, 2.0);
  const auto b = skew_chebyshev_bounds(flat);
  EXPECT_TRUE(b.degenerate);
  const auto split = remove_outliers(from_magnitudes(flat), outlier::Ours{});
  EXPECT_TRUE(split.degenerate);
  EXPECT_EQ(split.kept.size(), 10u);
  EXPECT_THROW(skew_chebyshev_bounds(std::vector<double>{1, 2, 3}), Error);
  EXPECT_THROW(skew_chebyshev_bounds(std::vector<double>{1, 2, 3, 0}), Error);
}

TEST(SkewChebyshev, ScaleEquivariant) {
  std::mt19937_64 rng(3);
  std::lognormal_distribution<double> d(0.0, 0.8);
  std::vector<double> a(300);
  for (auto& x : a) x = d(rng);
  // powers of two keep every ratio exact
  for (double c : {0.25, 2.0, 8.0}) {
    std::vector<double> s(a);
    for (auto& x : s) x *= c;
    const auto ba = skew_chebyshev_bounds(a);
    const auto bs = skew_chebyshev_bounds(s);
    EXPECT_NEAR(bs.gamma, ba.gamma, 1e-12);
    EXPECT_NEAR(bs.rho, ba.rho, 1e-12);
    EXPECT_NEAR(bs.lambda_minus, c * ba.lambda_minus, 1e-9 * c);
    EXPECT_NEAR(bs.lambda_plus, c * ba.lambda_plus, 1e-9 * c);
  }
}

TEST(SkewChebyshev, MedianInsideBounds) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::lognormal_distribution<double> d(0.3 * trial / 50.0, 0.2 + trial / 50.0);
    std::vector<double> a(200);
    for (auto& x : a) x = d(rng);
    const auto b = skew_chebyshev_bounds(a);
    const double med = stats::median(a);
    EXPECT_LE(b.lambda_minus, med);
    EXPECT_GE(b.lambda_plus, med);
  }
}

TEST(Std3, SmallSampleCannotFlagSpike) {
  // With n = 5 the largest possible z is (n-1)/sqrt(n) < 3.
  const std::vector<double> small{1, 1, 1, 1, 100};
  auto s = remove_outliers(from_magnitudes(small), outlier::Std3{});
  EXPECT_EQ(s.kept.size(), 5u);

  std::vector<double> big(20, 1.0);
  big.push_back(100.0);
  s = remove_outliers(from_magnitudes(big), outlier::Std3{});
  ASSERT_EQ(s.removed.size(), 1u);
  EXPECT_EQ(s.removed[0].magnitude, 100.0);
}

TEST(Baselines, ZScoreAndModified) {
  std::vector<double> m(40, 1.0);
  for (int i = 0; i < 40; ++i) m[static_cast<std::size_t>(i)] = 1.0 + 0.01 * i;
  m.push_back(1e4);
  auto z = remove_outliers(from_magnitudes(m), outlier::ZScore{});
  ASSERT_EQ(z.removed.size(), 1u);
  EXPECT_EQ(z.removed[0].magnitude, 1e4);
  auto mz = remove_outliers(from_magnitudes(m), outlier::ModifiedZScore{});
  ASSERT_EQ(mz.removed.size(), 1u);
  EXPECT_EQ(mz.removed[0].magnitude, 1e4);
  const auto kept = kept_magnitudes(mz);
  EXPECT_EQ(kept.size(), 40u);
}

TEST(Baselines, EmptyInput) {
  EXPECT_TRUE(remove_outliers({}, outlier::Ours{}).kept.empty());
  EXPECT_TRUE(remove_outliers({}, outlier::Std3{}).kept.empty());
}

TEST(Mixture, OursRejectsMoreBackground) {
  std::mt19937_64 rng(2024);
  std::lognormal_distribution<double> fg(1.0, 0.5);
  std::uniform_real_distribution<double> bg(0.001, 0.02);
  GrayImage mask{2, 1, {255, 0}};
  std::vector<FlowVector> v;
  for (int i = 0; i < 600; ++i) v.push_back(FlowVector::make(0, 0, fg(rng), 0, 0));
  for (int i = 0; i < 400; ++i) v.push_back(FlowVector::make(1, 0, bg(rng), 0, 0));
  auto rate = [&](const OutlierMethod& m) {
    const auto s = remove_outliers(v, m);
    return classify_against_mask(s.kept, s.removed, mask);
  };
  const auto ours = rate(outlier::Ours{});
  const auto std3 = rate(outlier::Std3{});
  const auto z = rate(outlier::ZScore{});
  EXPECT_GT(ours.tn, std3.tn);
  EXPECT_GT(ours.tn, z.tn);
  EXPECT_GT(ours.tb, std3.tb);
}

TEST(Classify, Examples) {
  GrayImage mask{4, 1, {255, 255, 0, 0}};
  const std::vector<FlowVector> kept{FlowVector::make(0, 0, 1, 0, 0), FlowVector::make(2, 0, 1, 0, 0)};
  const std::vector<FlowVector> removed{FlowVector::make(1, 0, 1, 0, 0), FlowVector::make(3, 0, 1, 0, 0)};
  const auto r = classify_against_mask(kept, removed, mask);
  EXPECT_DOUBLE_EQ(r.tp, 0.5);
  EXPECT_DOUBLE_EQ(r.fn, 0.5);
  EXPECT_DOUBLE_EQ(r.tn, 0.5);
  EXPECT_DOUBLE_EQ(r.fp, 0.5);
  EXPECT_DOUBLE_EQ(r.tb, 0.5);

  const auto only_fg = classify_against_mask(kept, {}, GrayImage{4, 1, {255, 255, 255, 255}});
  EXPECT_TRUE(only_fg.no_negatives);
  EXPECT_DOUBLE_EQ(only_fg.tn, 1.0);
  EXPECT_DOUBLE_EQ(only_fg.tb, 1.0);
}

TEST(Csv, Header) {
  const std::vector<FlowVector> v{FlowVector::make(1, 2, 3, 4, 5)};
  const auto csv = vectors_to_csv(v);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "x,y,u,v,L,theta,t");
  EXPECT_NE(csv.find("1,2,3,4,5,"), std::string::npos);
}
