#include "flowtraj/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "flowtraj/kmeans.hpp"
#include "flowtraj/stats.hpp"

namespace flowtraj {

namespace {

/// Second derivatives of the natural cubic spline through (t_i, y_i).
std::vector<double> natural_spline(std::span<const double> t, std::span<const double> y) {
  const std::size_t n = t.size();
  std::vector<double> m(n, 0.0);
  if (n < 3) return m;
  std::vector<double> c(n, 0.0), d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = t[i] - t[i - 1], h1 = t[i + 1] - t[i];
    const double a = h0, b = 2.0 * (h0 + h1), cc = h1;
    const double r = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
    const double denom = b - a * c[i - 1];
    c[i] = cc / denom;
    d[i] = (r - a * d[i - 1]) / denom;
  }
  for (std::size_t i = n - 2; i >= 1; --i) {
    m[i] = d[i] - c[i] * m[i + 1];
    if (i == 1) break;
  }
  return m;
}

double spline_eval(std::span<const double> t, std::span<const double> y, std::span<const double> m, double s) {
  const std::size_t n = t.size();
  std::size_t k = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), s) - t.begin());
  k = std::clamp<std::size_t>(k, 1, n - 1);
  const double h = t[k] - t[k - 1];
  const double a = (t[k] - s) / h, b = (s - t[k - 1]) / h;
  return a * y[k - 1] + b * y[k] + ((a * a * a - a) * m[k - 1] + (b * b * b - b) * m[k]) * h * h / 6.0;
}

}  // namespace

Polyline resample(std::span<const Vec2> traj, int n) {
  if (traj.empty() || n < 1) throw Error(ErrorCode::InvalidArgument, "resample needs points and n >= 1");
  Polyline pts;
  for (const Vec2& p : traj) {
    if (pts.empty() || distance(pts.back(), p) > 0.0) pts.push_back(p);
  }
  if (pts.size() == 1) return Polyline(static_cast<std::size_t>(n), pts.front());

  std::vector<double> t{0.0}, xs{pts[0].x}, ys{pts[0].y};
  for (std::size_t i = 1; i < pts.size(); ++i) {
    t.push_back(t.back() + distance(pts[i], pts[i - 1]));
    xs.push_back(pts[i].x);
    ys.push_back(pts[i].y);
  }
  const auto mx = natural_spline(t, xs);
  const auto my = natural_spline(t, ys);
  Polyline out(static_cast<std::size_t>(n));
  const double total = t.back();
  for (int i = 0; i < n; ++i) {
    const double s = n == 1 ? 0.0 : total * i / (n - 1);
    out[static_cast<std::size_t>(i)] = {spline_eval(t, xs, mx, s), spline_eval(t, ys, my, s)};
  }
  out.front() = pts.front();
  if (n > 1) out.back() = pts.back();
  return out;
}

std::vector<simd::Feature> features(std::span<const Vec2> traj, double diag) {
  std::vector<simd::Feature> out(traj.size());
  Vec2 dir;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    if (i + 1 < traj.size()) {
      const Vec2 seg = traj[i + 1] - traj[i];
      const double n = norm(seg);
      if (n > 0.0) dir = (1.0 / n) * seg;
    }
    out[i] = {traj[i].x / diag, traj[i].y / diag, dir.x, dir.y};
  }
  // A leading run of zero-length segments takes the first defined direction.
  for (std::size_t i = traj.size(); i-- > 1;) {
    if (out[i - 1][2] == 0.0 && out[i - 1][3] == 0.0) {
      out[i - 1][2] = out[i][2];
      out[i - 1][3] = out[i][3];
    }
  }
  return out;
}

Metric parse_metric(const std::string& name) {
  if (name == "euclidean") return Metric::Euclidean;
  if (name == "hausdorff") return Metric::Hausdorff;
  if (name == "dtw") return Metric::Dtw;
  if (name == "lcs") return Metric::Lcs;
  throw Error(ErrorCode::InvalidArgument, "unknown metric '" + name + "'");
}

Regularisation parse_regularisation(const std::string& name) {
  if (name == "cluster_threshold") return Regularisation::ClusterThreshold;
  if (name == "quartile_threshold") return Regularisation::QuartileThreshold;
  if (name == "median_rls") return Regularisation::MedianRls;
  if (name == "local_scaling_rls") return Regularisation::LocalScalingRls;
  throw Error(ErrorCode::InvalidArgument, "unknown regularisation '" + name + "'");
}

const char* to_string(Metric m) noexcept {
  switch (m) {
    case Metric::Euclidean: return "euclidean";
    case Metric::Hausdorff: return "hausdorff";
    case Metric::Dtw: return "dtw";
    case Metric::Lcs: return "lcs";
  }
  return "unknown";
}

const char* to_string(Regularisation r) noexcept {
  switch (r) {
    case Regularisation::ClusterThreshold: return "cluster_threshold";
    case Regularisation::QuartileThreshold: return "quartile_threshold";
    case Regularisation::MedianRls: return "median_rls";
    case Regularisation::LocalScalingRls: return "local_scaling_rls";
  }
  return "unknown";
}

std::vector<double> feature_distance_table(std::span<const simd::Feature> a, std::span<const simd::Feature> b) {
  std::vector<double> out(a.size() * b.size());
  simd::active().feature_distances(a, b, out);
  return out;
}

double dtw_cost(std::span<const double> table, int n, int m) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> acc(static_cast<std::size_t>((n + 1) * (m + 1)), inf);
  auto A = [&](int i, int j) -> double& { return acc[static_cast<std::size_t>(i * (m + 1) + j)]; };
  A(0, 0) = 0.0;
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= m; ++j) {
      A(i, j) = table[static_cast<std::size_t>((i - 1) * m + (j - 1))] +
                std::min({A(i - 1, j - 1), A(i - 1, j), A(i, j - 1)});
    }
  }
  return A(n, m);
}

int lcs_length(std::span<const double> table, int n, int m, double eps) {
  std::vector<int> L(static_cast<std::size_t>((n + 1) * (m + 1)), 0);
  auto at = [&](int i, int j) -> int& { return L[static_cast<std::size_t>(i * (m + 1) + j)]; };
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= m; ++j) {
      at(i, j) = table[static_cast<std::size_t>((i - 1) * m + (j - 1))] <= eps
                     ? at(i - 1, j - 1) + 1
                     : std::max(at(i - 1, j), at(i, j - 1));
    }
  }
  return at(n, m);
}

double traj_distance(std::span<const simd::Feature> a, std::span<const simd::Feature> b, Metric metric,
                     double lcs_eps) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyInput, "trajectory without points");
  if (metric != Metric::Hausdorff && a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch, "aligned metrics need equal point counts");
  }
  const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
  const auto table = feature_distance_table(a, b);
  switch (metric) {
    case Metric::Euclidean: {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += table[static_cast<std::size_t>(i * m + i)];
      return s / n;
    }
    case Metric::Hausdorff: {
      double ab = 0.0;
      std::vector<double> col_min(static_cast<std::size_t>(m), std::numeric_limits<double>::infinity());
      for (int i = 0; i < n; ++i) {
        double row_min = std::numeric_limits<double>::infinity();
        for (int j = 0; j < m; ++j) {
          const double d = table[static_cast<std::size_t>(i * m + j)];
          row_min = std::min(row_min, d);
          col_min[static_cast<std::size_t>(j)] = std::min(col_min[static_cast<std::size_t>(j)], d);
        }
        ab = std::max(ab, row_min);
      }
      return std::max(ab, *std::max_element(col_min.begin(), col_min.end()));
    }
    case Metric::Dtw:
      return dtw_cost(table, n, m);
    case Metric::Lcs:
      return 1.0 - static_cast<double>(lcs_length(table, n, m, lcs_eps)) / n;
  }
  return 0.0;
}

DistanceMatrix distance_matrix(std::span<const Polyline> annotated, std::span<const Polyline> extracted,
                               Metric metric, double diag, double lcs_eps) {
  DistanceMatrix out{static_cast<int>(annotated.size()), static_cast<int>(extracted.size()), {}};
  out.d.resize(annotated.size() * extracted.size());
  for (std::size_t r = 0; r < annotated.size(); ++r) {
    for (std::size_t c = 0; c < extracted.size(); ++c) {
      const int n = std::max<int>(2, static_cast<int>(std::min(annotated[r].size(), extracted[c].size())));
      const auto fa = features(resample(annotated[r], n), diag);
      const auto fb = features(resample(extracted[c], n), diag);
      out.d[r * extracted.size() + c] = traj_distance(fa, fb, metric, lcs_eps);
    }
  }
  return out;
}

DistanceMatrix normalise(const DistanceMatrix& m) {
  DistanceMatrix out = m;
  if (m.d.empty()) return out;
  const auto [lo, hi] = std::minmax_element(m.d.begin(), m.d.end());
  const double range = *hi - *lo;
  for (double& v : out.d) v = range > 0.0 ? (v - *lo) / range : 0.0;
  return out;
}

namespace {

AdaptiveKMeans cluster_values(std::span<const double> values, double t_c) {
  std::vector<Vec2> pts;
  pts.reserve(values.size());
  for (double v : values) pts.push_back({v, 0.0});
  return kmeans_adaptive(pts, t_c);
}

}  // namespace

double lowest_cluster_max(std::span<const double> values, double t_c) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "no values to cluster");
  const AdaptiveKMeans km = cluster_values(values, t_c);
  std::size_t lowest = 0;
  for (std::size_t k = 1; k < km.result.centers.size(); ++k) {
    if (km.result.centers[k].x < km.result.centers[lowest].x) lowest = k;
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (static_cast<std::size_t>(km.result.labels[i]) == lowest) mx = std::max(mx, values[i]);
  }
  return mx;
}

double rls(double u, double sigma) {
  const double den = sigma * sigma + u * u;
  return den > 0.0 ? u * u / den : 0.0;
}

DistanceMatrix regularise(const DistanceMatrix& m, Regularisation method, double t_c) {
  if (m.d.empty()) throw Error(ErrorCode::EmptyInput, "empty distance matrix");
  DistanceMatrix out = m;
  switch (method) {
    case Regularisation::ClusterThreshold:
    case Regularisation::QuartileThreshold: {
      const double cap = method == Regularisation::ClusterThreshold ? lowest_cluster_max(m.d, t_c)
                                                                    : stats::quantile(m.d, 0.75);
      for (double& v : out.d) v = std::min(v, cap);
      break;
    }
    case Regularisation::MedianRls: {
      const double sigma = stats::median(m.d);
      for (double& v : out.d) v = rls(v, sigma);
      break;
    }
    case Regularisation::LocalScalingRls: {
      // Local scale of each cluster: gap between its largest entry and that
      // entry's 7th nearest neighbour among all entries.
      const AdaptiveKMeans km = cluster_values(m.d, t_c);
      double sum = 0.0;
      for (std::size_t k = 0; k < km.result.centers.size(); ++k) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m.d.size(); ++i) {
          if (static_cast<std::size_t>(km.result.labels[i]) == k) mx = std::max(mx, m.d[i]);
        }
        std::vector<double> gaps;
        gaps.reserve(m.d.size());
        for (double v : m.d) gaps.push_back(std::abs(v - mx));
        std::sort(gaps.begin(), gaps.end());
        // gaps[0] is the entry itself.
        sum += gaps[std::min<std::size_t>(7, gaps.size() - 1)];
      }
      const double sigma = sum / static_cast<double>(km.result.centers.size());
      for (double& v : out.d) v = rls(v, sigma);
      break;
    }
  }
  return out;
}

std::vector<int> hungarian_assign(const DistanceMatrix& m) {
  const int rows = m.rows, cols = m.cols;
  std::vector<int> out(static_cast<std::size_t>(rows), -1);
  if (rows == 0 || cols == 0) return out;
  const int n = std::max(rows, cols);
  const double pad = *std::max_element(m.d.begin(), m.d.end());
  auto cost = [&](int i, int j) { return i < rows && j < cols ? m.at(i, j) : pad; };

  // Potentials formulation, 1-based with a virtual column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<int> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  for (int j = 1; j <= n; ++j) {
    const int i = p[static_cast<std::size_t>(j)] - 1;
    if (i < rows && j - 1 < cols) out[static_cast<std::size_t>(i)] = j - 1;
  }
  return out;
}

std::vector<CurvePoint> fp_error_curve(const DistanceMatrix& raw, std::span<const int> assignment,
                                       std::vector<double> thresholds) {
  std::sort(thresholds.begin(), thresholds.end());
  std::vector<CurvePoint> out;
  int assigned = 0;
  for (int c : assignment) assigned += c >= 0;
  for (double tau : thresholds) {
    CurvePoint pt;
    pt.tau = tau;
    for (std::size_t r = 0; r < assignment.size(); ++r) {
      const int c = assignment[r];
      if (c < 0) continue;
      const double d = raw.at(static_cast<int>(r), c);
      if (d <= tau) {
        ++pt.correct;
        pt.acc_error += d;
      }
    }
    pt.fp_rate = assigned > 0 ? static_cast<double>(assigned - pt.correct) / assigned : 0.0;
    pt.fn_rate = raw.rows > 0 ? static_cast<double>(raw.rows - pt.correct) / raw.rows : 0.0;
    out.push_back(pt);
  }
  return out;
}

std::string curve_to_csv(std::span<const CurvePoint> curve) {
  std::vector<CurvePoint> sorted(curve.begin(), curve.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const CurvePoint& a, const CurvePoint& b) { return a.tau < b.tau; });
  std::ostringstream os;
  os.precision(17);
  os << "tau,fp_rate,acc_error\n";
  for (const auto& p : sorted) os << p.tau << ',' << p.fp_rate << ',' << p.acc_error << '\n';
  return os.str();
}

}  // namespace flowtraj
