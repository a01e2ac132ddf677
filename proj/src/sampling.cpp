#include "flowtraj/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "flowtraj/stats.hpp"

namespace flowtraj {

FlowVector FlowVector::make(double x, double y, double u, double v, int t) {
  return {x, y, u, v, std::hypot(u, v), wrap_angle(v, u), t};
}

std::vector<Vec2> sample_keypoints(const FlowMap& flow, const SamplingStrategy& strategy) {
  const int step = std::visit([](const auto& s) { return s.step; }, strategy);
  if (step < 1) throw Error(ErrorCode::InvalidArgument, "sampling step must be >= 1");
  const double min_mag = std::holds_alternative<sampling::MotionGrid>(strategy)
                             ? std::get<sampling::MotionGrid>(strategy).min_magnitude
                             : -1.0;
  const int offset = step / 2;
  std::vector<Vec2> points;
  for (int j = 0; j < flow.height() / step; ++j) {
    for (int i = 0; i < flow.width() / step; ++i) {
      const int x = i * step + offset, y = j * step + offset;
      if (min_mag >= 0.0 && norm(flow.at(x, y)) < min_mag) continue;
      points.push_back({static_cast<double>(x), static_cast<double>(y)});
    }
  }
  return points;
}

std::vector<FlowVector> build_flow_vectors(std::span<const Vec2> points, const FlowMap& flow,
                                           int kernel, int t) {
  if (kernel < 1 || kernel % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "median kernel size must be odd and >= 1");
  }
  const int r = kernel / 2;
  std::vector<FlowVector> out;
  out.reserve(points.size());
  std::vector<double> us, vs;
  us.reserve(static_cast<std::size_t>(kernel) * kernel);
  vs.reserve(us.capacity());
  for (const Vec2& p : points) {
    const int cx = std::clamp(static_cast<int>(std::lround(p.x)), 0, flow.width() - 1);
    const int cy = std::clamp(static_cast<int>(std::lround(p.y)), 0, flow.height() - 1);
    us.clear();
    vs.clear();
    for (int y = std::max(0, cy - r); y <= std::min(flow.height() - 1, cy + r); ++y) {
      for (int x = std::max(0, cx - r); x <= std::min(flow.width() - 1, cx + r); ++x) {
        us.push_back(flow.u(x, y));
        vs.push_back(flow.v(x, y));
      }
    }
    out.push_back(FlowVector::make(p.x, p.y, stats::median(us), stats::median(vs), t));
  }
  return out;
}

std::vector<FlowVector> dual_threshold(std::span<const FlowVector> vectors, double lo, double hi) {
  if (!(lo >= 0.0) || !(lo < hi)) {
    throw Error(ErrorCode::InvalidArgument, "dual threshold requires 0 <= lo < hi");
  }
  std::vector<FlowVector> out;
  for (const auto& f : vectors) {
    if (f.magnitude >= lo && f.magnitude <= hi) out.push_back(f);
  }
  return out;
}

OutlierBounds skew_chebyshev_bounds(std::span<const double> magnitudes) {
  const std::size_t n = magnitudes.size();
  if (n < 4) throw Error(ErrorCode::InvalidArgument, "outlier bounds need at least 4 samples");
  if (std::any_of(magnitudes.begin(), magnitudes.end(), [](double m) { return !(m > 0.0); })) {
    throw Error(ErrorCode::InvalidArgument, "outlier bounds need strictly positive magnitudes");
  }
  const auto [min_it, max_it] = std::minmax_element(magnitudes.begin(), magnitudes.end());
  const double lo = *min_it, hi = *max_it;

  OutlierBounds b;
  b.lambda_minus = lo;
  b.lambda_plus = hi;

  const double sigma = stats::stddev(magnitudes);
  std::vector<double> logs(n);
  std::transform(magnitudes.begin(), magnitudes.end(), logs.begin(), [](double m) { return std::log(m); });
  const double iqr = stats::quantile(logs, 0.75) - stats::quantile(logs, 0.25);
  if (sigma == 0.0 || iqr == 0.0) {
    b.degenerate = true;
    return b;
  }

  const double mu = stats::mean(magnitudes);
  const double nu = stats::median({magnitudes.begin(), magnitudes.end()});
  b.gamma = (mu - nu) / sigma;
  if (b.gamma > 0.0) {
    b.chi_minus = std::abs(b.gamma);
  } else if (b.gamma < 0.0) {
    b.chi_plus = std::abs(b.gamma);
  }

  // Freedman-Diaconis histogram of the log magnitudes.
  const double bin_width = 2.0 * iqr * std::pow(static_cast<double>(n), -1.0 / 3.0);
  const auto [lmin_it, lmax_it] = std::minmax_element(logs.begin(), logs.end());
  const double lmin = *lmin_it;
  const int bins = std::max(1, static_cast<int>(std::ceil((*lmax_it - lmin) / bin_width)));
  auto bin_of = [&](double l) {
    return std::clamp(static_cast<int>(std::floor((l - lmin) / bin_width)), 0, bins - 1);
  };
  std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
  for (double l : logs) ++counts[static_cast<std::size_t>(bin_of(l))];
  const double median_count = static_cast<double>(counts[static_cast<std::size_t>(bin_of(stats::median(logs)))]);
  const double mode_count = static_cast<double>(*std::max_element(counts.begin(), counts.end()));
  b.rho = 1.0 - median_count / mode_count;

  b.s_minus = b.rho * b.chi_minus;
  b.s_plus = b.rho * b.chi_plus;
  b.ell_minus = sigma * b.s_minus;
  b.ell_plus = sigma * b.s_plus;
  b.lambda_minus = lo + b.ell_minus;
  b.lambda_plus = hi - b.ell_plus;
  return b;
}

namespace {

OutlierSplit split_by(std::span<const FlowVector> vectors, auto keep) {
  OutlierSplit s;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    (keep(i) ? s.kept : s.removed).push_back(vectors[i]);
  }
  return s;
}

OutlierSplit pass_all(std::span<const FlowVector> vectors) {
  OutlierSplit s;
  s.kept.assign(vectors.begin(), vectors.end());
  s.degenerate = true;
  return s;
}

std::vector<double> log_magnitudes(std::span<const FlowVector> vectors) {
  std::vector<double> out(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    out[i] = std::log(std::max(vectors[i].magnitude, std::numeric_limits<double>::min()));
  }
  return out;
}

}  // namespace

OutlierSplit remove_outliers(std::span<const FlowVector> vectors, const OutlierMethod& method) {
  if (vectors.empty()) return {};
  std::vector<double> mags(vectors.size());
  std::transform(vectors.begin(), vectors.end(), mags.begin(),
                 [](const FlowVector& f) { return f.magnitude; });

  return std::visit(
      [&](const auto& m) -> OutlierSplit {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, outlier::Ours>) {
          if (vectors.size() < 4 ||
              std::any_of(mags.begin(), mags.end(), [](double x) { return !(x > 0.0); })) {
            return pass_all(vectors);
          }
          const OutlierBounds b = skew_chebyshev_bounds(mags);
          if (b.degenerate) return pass_all(vectors);
          return split_by(vectors, [&](std::size_t i) {
            return mags[i] >= b.lambda_minus && mags[i] <= b.lambda_plus;
          });
        } else if constexpr (std::is_same_v<M, outlier::Std3>) {
          const double mu = stats::mean(mags), sd = stats::stddev(mags);
          return split_by(vectors, [&](std::size_t i) { return std::abs(mags[i] - mu) <= 3.0 * sd; });
        } else if constexpr (std::is_same_v<M, outlier::ZScore>) {
          const auto logs = log_magnitudes(vectors);
          const double mu = stats::mean(logs), sd = stats::stddev(logs);
          if (sd == 0.0) return pass_all(vectors);
          return split_by(vectors, [&](std::size_t i) { return std::abs(logs[i] - mu) / sd <= m.k; });
        } else {
          const auto logs = log_magnitudes(vectors);
          const double med = stats::median(logs);
          std::vector<double> dev(logs.size());
          std::transform(logs.begin(), logs.end(), dev.begin(), [&](double l) { return std::abs(l - med); });
          const double mad = stats::median(dev);
          if (mad == 0.0) return pass_all(vectors);
          return split_by(vectors, [&](std::size_t i) {
            return std::abs(0.6745 * (logs[i] - med) / mad) <= m.k;
          });
        }
      },
      method);
}

ClassRates classify_against_mask(std::span<const FlowVector> kept,
                                 std::span<const FlowVector> removed, const GrayImage& mask) {
  auto inside = [&](const FlowVector& f) {
    const int x = std::clamp(static_cast<int>(std::lround(f.x)), 0, mask.width - 1);
    const int y = std::clamp(static_cast<int>(std::lround(f.y)), 0, mask.height - 1);
    return mask.at(x, y) != 0;
  };
  double tp = 0, fn = 0, tn = 0, fp = 0;
  for (const auto& f : kept) (inside(f) ? tp : fp) += 1;
  for (const auto& f : removed) (inside(f) ? fn : tn) += 1;

  ClassRates r;
  if (tp + fn > 0) {
    r.tp = tp / (tp + fn);
    r.fn = fn / (tp + fn);
  } else {
    r.tp = 1.0;
    r.no_positives = true;
  }
  if (tn + fp > 0) {
    r.tn = tn / (tn + fp);
    r.fp = fp / (tn + fp);
  } else {
    r.tn = 1.0;
    r.no_negatives = true;
  }
  r.tb = 0.5 * (r.tp + r.tn);
  return r;
}

std::string vectors_to_csv(std::span<const FlowVector> vectors) {
  std::ostringstream os;
  os << std::setprecision(17) << "x,y,u,v,L,theta,t\n";
  for (const auto& f : vectors) {
    os << f.x << ',' << f.y << ',' << f.u << ',' << f.v << ',' << f.magnitude << ',' << f.theta
       << ',' << f.t << '\n';
  }
  return os.str();
}

}  // namespace flowtraj
