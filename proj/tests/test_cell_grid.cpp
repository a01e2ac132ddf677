#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "flowtraj/cell_grid.hpp"
#include "flowtraj/kmeans.hpp"

using namespace flowtraj;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::vector<Vec2> load_blobs() {
  std::ifstream in(std::filesystem::path(FLOWTRAJ_TEST_DATA) / "blobs.txt");
  std::vector<Vec2> pts;
  double x = 0, y = 0;
  while (in >> x >> y) pts.push_back({x, y});
  return pts;
}

FlowVector at_angle(double x, double y, double deg) {
  return FlowVector::make(x, y, std::cos(deg * kDeg), std::sin(deg * kDeg), 0);
}

VideoVolumeConfig config(int w, int h) {
  VideoVolumeConfig c;
  c.width = w;
  c.height = h;
  c.frames = 10;
  return c;
}

std::set<int> bins_of(const std::vector<OrientationGroup>& g) {
  std::set<int> s;
  for (const auto& o : g) s.insert(o.bin);
  return s;
}

}  // namespace

TEST(Distribute, HalfOpenCells) {
  const auto grid = distribute(std::vector<FlowVector>{at_angle(0, 0, 0), at_angle(15, 0, 0), at_angle(14.9, 29.9, 0)},
                               config(60, 45));
  EXPECT_EQ(grid.at(0, 0).vectors.size(), 1u);
  EXPECT_EQ(grid.at(1, 0).vectors.size(), 1u);
  EXPECT_EQ(grid.at(0, 1).vectors.size(), 1u);
}

TEST(Distribute, RemainderFoldsIntoLastCell) {
  const auto grid = distribute(std::vector<FlowVector>{at_angle(68, 40, 0)}, config(70, 44));
  EXPECT_EQ(grid.cols(), 4);
  EXPECT_EQ(grid.rows(), 2);
  EXPECT_EQ(grid.at(3, 1).vectors.size(), 1u);
}

TEST(Distribute, Partition) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> x(0, 100), y(0, 80);
  std::vector<FlowVector> v;
  for (int i = 0; i < 100; ++i) v.push_back(at_angle(x(rng), y(rng), 30));
  const auto grid = distribute(v, config(100, 80));
  std::size_t total = 0;
  for (const auto& c : grid.cells()) {
    total += c.vectors.size();
    for (const auto& f : c.vectors) {
      EXPECT_EQ(grid.locate(f.x, f.y), std::make_pair(c.col, c.row));
    }
  }
  EXPECT_EQ(total, 100u);
}

TEST(VolumeConfig, Validation) {
  auto c = config(100, 80);
  EXPECT_NO_THROW(c.validate());
  c.cell_width = 0;
  try {
    c.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Config);
    EXPECT_NE(std::string(e.what()).find("cell_width"), std::string::npos);
  }
}

TEST(Quantise, SingleBin) {
  Cell cell;
  for (int i = 0; i < 5; ++i) cell.vectors.push_back(at_angle(1, 1, 10));
  const auto g = quantise_orientations(cell);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0].bin, 0);
  EXPECT_EQ(g[0].members.size(), 5u);
}

TEST(Quantise, HistogramFromFigure) {
  const int counts[8] = {20, 8, 25, 33, 3, 28, 12, 16};
  Cell cell;
  for (int b = 0; b < 8; ++b) {
    for (int i = 0; i < counts[b]; ++i) cell.vectors.push_back(at_angle(2, 2, 45.0 * b + 20.0));
  }
  EXPECT_EQ(bins_of(quantise_orientations(cell)), (std::set<int>{0, 2, 3, 5}));
}

TEST(Quantise, UniformFallbackAndEmpty) {
  Cell cell;
  for (int b = 0; b < 8; ++b) cell.vectors.push_back(at_angle(2, 2, 45.0 * b + 1.0));
  EXPECT_EQ(quantise_orientations(cell).size(), 8u);
  try {
    quantise_orientations(Cell{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCell);
  }
}

TEST(Quantise, BinBoundaries) {
  EXPECT_EQ(orientation_bin(0.0), 0);
  EXPECT_EQ(orientation_bin(44.999 * kDeg), 0);
  EXPECT_EQ(orientation_bin(45.0 * kDeg), 1);
  EXPECT_EQ(orientation_bin(359.9 * kDeg), 7);
}

TEST(Quantise, RotationBy45ShiftsBins) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> a(0, 360);
  std::vector<double> angles;
  for (int i = 0; i < 40; ++i) angles.push_back(a(rng));
  Cell base, rotated;
  for (double d : angles) {
    base.vectors.push_back(at_angle(1, 1, d));
    rotated.vectors.push_back(at_angle(1, 1, d + 45.0));
  }
  std::set<int> shifted;
  for (int b : bins_of(quantise_orientations(base))) shifted.insert((b + 1) % 8);
  EXPECT_EQ(bins_of(quantise_orientations(rotated)), shifted);

  auto grid_of = [](const Cell& c) {
    CellGrid g(1, 1, 15, 15);
    g.at(0, 0).vectors = c.vectors;
    return g;
  };
  const auto e0 = cell_entropy(grid_of(base), 3);
  const auto e1 = cell_entropy(grid_of(rotated), 3);
  EXPECT_NEAR(e0.at(0, 0), e1.at(0, 0), 1e-12);
}

TEST(KMeans, BlobsOracle) {
  const auto pts = load_blobs();
  ASSERT_EQ(pts.size(), 16u);
  const auto r = kmeans_adaptive(pts, 0.01);
  EXPECT_EQ(r.k, 2);
  ASSERT_GE(r.compactness_by_k.size(), 2u);
  EXPECT_NEAR(r.compactness_by_k[0], 39013.472768861509, 1e-6);
  EXPECT_NEAR(r.compactness_by_k[1], 45.622907663626975, 1e-9);
  auto c = r.result.centers;
  std::sort(c.begin(), c.end(), [](Vec2 a, Vec2 b) { return a.x < b.x; });
  EXPECT_NEAR(c[0].x, 40.777259681773742, 1e-9);
  EXPECT_NEAR(c[0].y, 49.746646005675181, 1e-9);
  EXPECT_NEAR(c[1].x, 139.47747796126555, 1e-9);
  EXPECT_NEAR(c[1].y, 49.267712941306854, 1e-9);
}

TEST(KMeans, CompactnessNonIncreasing) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> d(0.0, 20.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vec2> pts(60);
    for (auto& p : pts) p = {d(rng), d(rng)};
    const auto c = compactness_schedule(pts, 5);
    ASSERT_EQ(c.size(), 5u);
    for (std::size_t k = 1; k < c.size(); ++k) EXPECT_LE(c[k], c[k - 1] + 1e-9);
  }
}

TEST(ClusterSpatial, Examples) {
  const std::vector<FlowVector> one{at_angle(3, 4, 90)};
  auto g = cluster_spatial(one, 0.01);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0].n, 1);
  EXPECT_EQ(g[0].x, 3.0);
  EXPECT_EQ(g[0].y, 4.0);

  const std::vector<FlowVector> same(6, at_angle(5, 5, 10));
  g = cluster_spatial(same, 0.01);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0].n, 6);
  const auto r = kmeans_adaptive(std::vector<Vec2>(6, Vec2{5, 5}), 0.01);
  EXPECT_EQ(r.k, 1);
  EXPECT_EQ(r.compactness_by_k[0], 0.0);
}

TEST(ClusterSpatial, BlobsSortedAndCircularMean) {
  std::vector<FlowVector> v;
  for (int i = 0; i < 5; ++i) v.push_back(at_angle(10 + 0.1 * i, 10, i % 2 ? 350 : 10));
  for (int i = 0; i < 3; ++i) v.push_back(at_angle(80 + 0.1 * i, 10, 0));
  const auto g = cluster_spatial(v, 0.01);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0].n, 5);
  EXPECT_EQ(g[1].n, 3);
  const double t = g[0].theta > std::numbers::pi ? g[0].theta - 2 * std::numbers::pi : g[0].theta;
  EXPECT_NEAR(t, std::atan2(std::sin(10 * kDeg), 5 * std::cos(10 * kDeg)), 1e-12);
  EXPECT_GE(g[0].theta, 0.0);
  EXPECT_LT(g[0].theta, 2 * std::numbers::pi);
}

TEST(FineToCoarse, RepresentativeIsLargest) {
  CellGrid grid(2, 1, 15, 15);
  for (int i = 0; i < 5; ++i) grid.at(0, 0).vectors.push_back(at_angle(2 + 0.01 * i, 2, 0));
  for (int i = 0; i < 3; ++i) grid.at(0, 0).vectors.push_back(at_angle(12 + 0.01 * i, 12, 0));
  quantise_and_cluster(grid, 0.01);
  const auto f = fine_to_coarse(grid);
  EXPECT_EQ(f.vectors.size(), 8u);
  ASSERT_EQ(f.groups.size(), 2u);
  ASSERT_EQ(f.representatives.size(), 1u);
  EXPECT_EQ(f.representatives[0].n, 5);
  EXPECT_TRUE(grid.at(1, 0).groups.empty());
  EXPECT_FALSE(grid.at(1, 0).representative.has_value());
  EXPECT_LE(f.representatives.size(), f.groups.size());
  EXPECT_LE(f.groups.size(), f.vectors.size());

  FineToCoarse acc;
  acc.append(f);
  acc.append(f);
  EXPECT_EQ(acc.groups.size(), 4u);
}

TEST(Entropy, HistogramExamples) {
  EXPECT_DOUBLE_EQ(histogram_entropy(std::vector<double>(8, 3.0)), 3.0);
  EXPECT_DOUBLE_EQ(histogram_entropy(std::vector<double>{4, 0, 0, 0, 0, 0, 0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(histogram_entropy(std::vector<double>{0, 2, 0, 0, 2, 0, 0, 0}), 1.0);
  std::vector<double> c{5, 1, 0, 3, 2, 0, 7, 1};
  const double e = histogram_entropy(c);
  std::sort(c.begin(), c.end());
  EXPECT_DOUBLE_EQ(histogram_entropy(c), e);
  EXPECT_EQ(histogram_entropy(std::vector<double>(8, 0.0)), 0.0);
}

TEST(Entropy, GridNeighbourhood) {
  CellGrid grid(3, 3, 15, 15);
  for (auto& c : grid.cells()) {
    c.vectors.push_back(at_angle(c.col * 15 + 5, c.row * 15 + 5, 10));
  }
  quantise_and_cluster(grid, 0.01);
  const auto e = cell_entropy(grid, 3);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) EXPECT_EQ(e.at(c, r), 0.0);
  }

  grid.at(1, 1).vectors = {at_angle(20, 20, 100)};
  quantise_and_cluster(grid, 0.01);
  const auto e2 = cell_entropy(grid, 3);
  for (double b : e2.bits) {
    EXPECT_GE(b, 0.0);
    EXPECT_LE(b, 3.0);
  }
  EXPECT_GT(e2.at(0, 0), 0.0);

  CellGrid empty(2, 2, 15, 15);
  const auto e3 = cell_entropy(empty, 3);
  EXPECT_TRUE(e3.empty_support[0]);
  EXPECT_EQ(e3.bits[0], 0.0);
  EXPECT_THROW(cell_entropy(grid, 2), Error);
}
