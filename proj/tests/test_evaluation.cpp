#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "flowtraj/evaluation.hpp"

using namespace flowtraj;

namespace {

double dtw_paths(std::span<const double> t, int m, int i, int j) {
  const double here = t[static_cast<std::size_t>(i * m + j)];
  if (i == 0 && j == 0) return here;
  double best = std::numeric_limits<double>::infinity();
  if (i > 0) best = std::min(best, dtw_paths(t, m, i - 1, j));
  if (j > 0) best = std::min(best, dtw_paths(t, m, i, j - 1));
  if (i > 0 && j > 0) best = std::min(best, dtw_paths(t, m, i - 1, j - 1));
  return here + best;
}

int lcs_subsets(std::span<const double> t, int m, int i, int j, double eps) {
  if (i < 0 || j < 0) return 0;
  int best = std::max(lcs_subsets(t, m, i - 1, j, eps), lcs_subsets(t, m, i, j - 1, eps));
  if (t[static_cast<std::size_t>(i * m + j)] <= eps) best = std::max(best, 1 + lcs_subsets(t, m, i - 1, j - 1, eps));
  return best;
}

double assignment_cost(const DistanceMatrix& m, const std::vector<int>& a) {
  double s = 0.0;
  for (int r = 0; r < m.rows; ++r) {
    if (a[static_cast<std::size_t>(r)] >= 0) s += m.at(r, a[static_cast<std::size_t>(r)]);
  }
  return s;
}

double brute_assignment(const DistanceMatrix& m) {
  std::vector<int> perm(static_cast<std::size_t>(m.cols));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (int r = 0; r < m.rows; ++r) s += m.at(r, perm[static_cast<std::size_t>(r)]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Polyline quarter_circle(int n) {
  Polyline p;
  for (int i = 0; i < n; ++i) {
    const double a = 0.5 * std::numbers::pi * i / (n - 1);
    p.push_back({10.0 * std::cos(a), 10.0 * std::sin(a)});
  }
  return p;
}

}  // namespace

TEST(Resample, StraightSegment) {
  const Polyline a{{0, 0}, {4, 8}};
  const auto r = resample(a, 5);
  ASSERT_EQ(r.size(), 5u);
  for (int i = 0; i < 5; ++i) {
    EXPECT_NEAR(r[static_cast<std::size_t>(i)].x, i, 1e-12);
    EXPECT_NEAR(r[static_cast<std::size_t>(i)].y, 2.0 * i, 1e-12);
  }
  EXPECT_EQ(r.front(), a.front());
  EXPECT_EQ(r.back(), a.back());
}

TEST(Resample, FixedPointOnUniformPolyline) {
  Polyline a;
  for (int i = 0; i < 12; ++i) a.push_back({1.5 * i, -0.5 * i + 3.0});
  const auto r = resample(a, 12);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT(norm(r[i] - a[i]), 1e-6);
}

TEST(Resample, QuarterCircle) {
  const auto r = resample(quarter_circle(10), 5);
  ASSERT_EQ(r.size(), 5u);
  for (const auto& p : r) EXPECT_NEAR(std::hypot(p.x, p.y), 10.0, 1e-2);
  EXPECT_EQ(r.front(), (Vec2{10.0, 0.0}));
}

TEST(Resample, Degenerate) {
  const auto r = resample(Polyline{{2, 3}, {2, 3}, {2, 3}}, 4);
  EXPECT_EQ(r, Polyline(4, Vec2{2, 3}));
  EXPECT_EQ(resample(Polyline{{1, 1}}, 3), Polyline(3, Vec2{1, 1}));
  EXPECT_THROW(resample(Polyline{}, 4), Error);
  EXPECT_THROW(resample(Polyline{{1, 1}, {2, 2}}, 0), Error);
}

TEST(Features, Directions) {
  const auto f = features(Polyline{{0, 0}, {3, 4}, {3, 8}}, 10.0);
  ASSERT_EQ(f.size(), 3u);
  EXPECT_DOUBLE_EQ(f[0][0], 0.0);
  EXPECT_DOUBLE_EQ(f[1][0], 0.3);
  EXPECT_DOUBLE_EQ(f[1][1], 0.4);
  EXPECT_DOUBLE_EQ(f[0][2], 0.6);
  EXPECT_DOUBLE_EQ(f[0][3], 0.8);
  EXPECT_DOUBLE_EQ(f[1][3], 1.0);
  EXPECT_DOUBLE_EQ(f[2][3], 1.0);
}

TEST(Metrics, IdentityAndSymmetry) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 50);
  for (int trial = 0; trial < 20; ++trial) {
    Polyline a, b;
    for (int i = 0; i < 7; ++i) {
      a.push_back({u(rng), u(rng)});
      b.push_back({u(rng), u(rng)});
    }
    const auto fa = features(a, 70.0), fb = features(b, 70.0);
    for (Metric m : {Metric::Euclidean, Metric::Hausdorff, Metric::Dtw, Metric::Lcs}) {
      EXPECT_EQ(traj_distance(fa, fa, m), 0.0);
      EXPECT_NEAR(traj_distance(fa, fb, m), traj_distance(fb, fa, m), 1e-12);
    }
    EXPECT_LE(traj_distance(fa, fb, Metric::Dtw), traj_distance(fa, fb, Metric::Euclidean) * 7 + 1e-12);
  }
}

TEST(Metrics, DtwMatchesExhaustivePaths) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 7, m = 2 + (trial * 3) % 7;
    std::vector<double> t(static_cast<std::size_t>(n * m));
    for (auto& x : t) x = u(rng);
    EXPECT_NEAR(dtw_cost(t, n, m), dtw_paths(t, m, n - 1, m - 1), 1e-12);
  }
  // (1,2,3) against (1,2,2,3) on one axis
  std::vector<simd::Feature> a, b;
  for (double v : {1.0, 2.0, 3.0}) a.push_back({v, 0, 0, 0});
  for (double v : {1.0, 2.0, 2.0, 3.0}) b.push_back({v, 0, 0, 0});
  const auto t = feature_distance_table(a, b);
  EXPECT_EQ(dtw_cost(t, 3, 4), 0.0);
  EXPECT_EQ(dtw_paths(t, 4, 2, 3), 0.0);
}

TEST(Metrics, LcsMatchesExhaustive) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(0, 0.2);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 8, m = 1 + (trial * 5) % 8;
    std::vector<double> t(static_cast<std::size_t>(n * m));
    for (auto& x : t) x = u(rng);
    EXPECT_EQ(lcs_length(t, n, m, 0.05), lcs_subsets(t, m, n - 1, m - 1, 0.05));
  }
}

TEST(Metrics, HausdorffSinglePair) {
  const std::vector<simd::Feature> a{{0, 0, 0, 0}}, b{{3, 4, 0, 0}};
  EXPECT_DOUBLE_EQ(traj_distance(a, b, Metric::Hausdorff), 5.0);
}

TEST(Metrics, LengthMismatch) {
  const std::vector<simd::Feature> a(3), b(4);
  for (Metric m : {Metric::Euclidean, Metric::Dtw, Metric::Lcs}) {
    try {
      traj_distance(a, b, m);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
    }
  }
  EXPECT_NO_THROW(traj_distance(a, b, Metric::Hausdorff));
}

TEST(Metrics, Names) {
  for (Metric m : {Metric::Euclidean, Metric::Hausdorff, Metric::Dtw, Metric::Lcs}) EXPECT_EQ(parse_metric(to_string(m)), m);
  for (Regularisation r : {Regularisation::ClusterThreshold, Regularisation::QuartileThreshold, Regularisation::MedianRls,
                           Regularisation::LocalScalingRls}) {
    EXPECT_EQ(parse_regularisation(to_string(r)), r);
  }
  EXPECT_THROW(parse_metric("frechet"), Error);
}

TEST(Matrix, NormaliseAndShape) {
  const std::vector<Polyline> ann{{{0, 0}, {10, 0}, {20, 0}}, {{0, 20}, {20, 20}}};
  const std::vector<Polyline> ext{{{0, 1}, {20, 1}}, {{0, 19}, {10, 19}, {20, 19}}, {{20, 0}, {0, 0}}};
  const auto d = distance_matrix(ann, ext, Metric::Dtw, 30.0);
  EXPECT_EQ(d.rows, 2);
  EXPECT_EQ(d.cols, 3);
  const auto n = normalise(d);
  EXPECT_EQ(*std::min_element(n.d.begin(), n.d.end()), 0.0);
  EXPECT_EQ(*std::max_element(n.d.begin(), n.d.end()), 1.0);
  EXPECT_EQ(hungarian_assign(n), (std::vector<int>{0, 1}));
  DistanceMatrix flat{1, 2, {3.0, 3.0}};
  EXPECT_EQ(normalise(flat).d, (std::vector<double>{0.0, 0.0}));
}

TEST(Regularise, Quartile) {
  DistanceMatrix m{2, 2, {0.1, 0.2, 0.3, 1.0}};
  const auto r = regularise(m, Regularisation::QuartileThreshold);
  EXPECT_NEAR(r.d[3], 0.47499999999999998, 1e-15);
  EXPECT_EQ(r.d[0], 0.1);
}

TEST(Regularise, MedianRls) {
  EXPECT_DOUBLE_EQ(rls(0.3, 0.3), 0.5);
  EXPECT_DOUBLE_EQ(rls(0.0, 0.3), 0.0);
  DistanceMatrix m{1, 5, {0.0, 0.2, 0.4, 0.6, 0.9}};
  const auto r = regularise(m, Regularisation::MedianRls);
  EXPECT_DOUBLE_EQ(r.d[2], 0.5);
  EXPECT_DOUBLE_EQ(r.d[0], 0.0);
  for (std::size_t i = 1; i < r.d.size(); ++i) EXPECT_GT(r.d[i], r.d[i - 1]);
}

TEST(Regularise, OrderPreservingRls) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  DistanceMatrix m{4, 5, std::vector<double>(20)};
  for (auto& x : m.d) x = u(rng);
  for (auto method : {Regularisation::MedianRls, Regularisation::LocalScalingRls}) {
    const auto r = regularise(m, method);
    for (std::size_t i = 0; i < 20; ++i) {
      for (std::size_t j = 0; j < 20; ++j) {
        if (m.d[i] < m.d[j]) EXPECT_LE(r.d[i], r.d[j]);
      }
    }
  }
}

TEST(Regularise, ClusterThreshold) {
  DistanceMatrix m{2, 4, {0.01, 0.02, 0.03, 0.02, 0.9, 0.95, 1.0, 0.92}};
  EXPECT_DOUBLE_EQ(lowest_cluster_max(m.d), 0.03);
  const auto r = regularise(m, Regularisation::ClusterThreshold);
  EXPECT_EQ(r.d[6], 0.03);
  EXPECT_EQ(r.d[1], 0.02);
  EXPECT_THROW(regularise(DistanceMatrix{}, Regularisation::MedianRls), Error);
}

TEST(Hungarian, IdentityLike) {
  DistanceMatrix m{3, 3, {0, 1, 1, 1, 0, 1, 1, 1, 0}};
  EXPECT_EQ(hungarian_assign(m), (std::vector<int>{0, 1, 2}));
}

TEST(Hungarian, BruteForceUpToEight) {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(0, 1);
  for (int n = 1; n <= 8; ++n) {
    for (int trial = 0; trial < 5; ++trial) {
      DistanceMatrix m{n, n, std::vector<double>(static_cast<std::size_t>(n * n))};
      for (auto& x : m.d) x = u(rng);
      const auto a = hungarian_assign(m);
      EXPECT_NEAR(assignment_cost(m, a), brute_assignment(m), 1e-12) << n;
      std::vector<int> sorted(a);
      std::sort(sorted.begin(), sorted.end());
      EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
    }
  }
}

TEST(Hungarian, Rectangular) {
  DistanceMatrix wide{2, 3, {0.9, 0.1, 0.5, 0.2, 0.8, 0.3}};
  const auto a = hungarian_assign(wide);
  EXPECT_EQ(a, (std::vector<int>{1, 0}));
  DistanceMatrix tall{3, 2, {0.9, 0.1, 0.5, 0.2, 0.05, 0.8}};
  const auto b = hungarian_assign(tall);
  EXPECT_EQ(std::count(b.begin(), b.end(), -1), 1);
  EXPECT_EQ(b, (std::vector<int>{1, -1, 0}));
}

TEST(Curve, Examples) {
  DistanceMatrix raw{3, 3, {0.1, 0.5, 0.9, 0.4, 0.2, 0.7, 0.6, 0.3, 0.4}};
  const std::vector<int> a{0, 1, 2};
  const auto c = fp_error_curve(raw, a, {0.0, 0.15, 0.3, 0.4, 1.0});
  ASSERT_EQ(c.size(), 5u);
  EXPECT_DOUBLE_EQ(c[0].fp_rate, 1.0);
  EXPECT_DOUBLE_EQ(c[0].acc_error, 0.0);
  EXPECT_EQ(c[1].correct, 1);
  EXPECT_NEAR(c[1].fp_rate, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(c[2].acc_error, 0.1 + 0.2, 1e-15);
  EXPECT_EQ(c[3].correct, 3);
  EXPECT_DOUBLE_EQ(c[4].fp_rate, 0.0);
  EXPECT_NEAR(c[4].acc_error, 0.7, 1e-15);
  EXPECT_DOUBLE_EQ(c[4].fn_rate, 0.0);
}

TEST(Curve, MonotoneAndSorted) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  DistanceMatrix raw{6, 6, std::vector<double>(36)};
  for (auto& x : raw.d) x = u(rng);
  const auto a = hungarian_assign(raw);
  std::vector<double> taus;
  for (int i = 0; i < 30; ++i) taus.push_back(u(rng));
  const auto c = fp_error_curve(raw, a, taus);
  for (std::size_t i = 1; i < c.size(); ++i) {
    EXPECT_GE(c[i].tau, c[i - 1].tau);
    EXPECT_LE(c[i].fp_rate, c[i - 1].fp_rate);
    EXPECT_GE(c[i].acc_error, c[i - 1].acc_error);
  }
  const auto csv = curve_to_csv(std::vector<CurvePoint>(c.rbegin(), c.rend()));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "tau,fp_rate,acc_error");
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  double prev = -1.0;
  while (std::getline(in, line)) {
    const double tau = std::stod(line.substr(0, line.find(',')));
    EXPECT_GE(tau, prev);
    prev = tau;
  }
}
