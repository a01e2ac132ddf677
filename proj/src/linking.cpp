#include "flowtraj/linking.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <tuple>
#include <random>

#include "flowtraj/stats.hpp"

namespace flowtraj {

namespace {

Vec2 tangent(std::span<const Vec2> pts, std::size_t i) {
  if (pts.size() < 2) return {};
  if (i == 0) return pts[1] - pts[0];
  if (i + 1 >= pts.size()) return pts[i] - pts[i - 1];
  return pts[i + 1] - pts[i - 1];
}

Vec2 last_segment(const Track& t) { return t.points[t.size() - 1] - t.points[t.size() - 2]; }
Vec2 first_segment(const Track& t) { return t.points[1] - t.points[0]; }

int clamp_count(int n, const Track& q, const Track& c) {
  return std::max(1, std::min({n, static_cast<int>(q.size()), static_cast<int>(c.size())}));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = seed ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xc2b2ae3d27d4eb4fULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Track make_track(std::vector<Vec2> points, const FlowMap& streak, int window, int t_start, int t_end) {
  Track t;
  t.window_first = t.window_last = window;
  t.t_start = t_start;
  t.t_end = t_end;
  t.S.reserve(points.size());
  t.v.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec2 f = streak.sample(points[i].x, points[i].y);
    Vec2 dir = f;
    if (norm(dir) < 1e-9) dir = tangent(points, i);
    const double n = norm(dir);
    t.S.push_back(n > 0.0 ? dir.x / n : 1.0);
    t.v.push_back(f);
  }
  t.points = std::move(points);
  return t;
}

bool geometric_ok(const Track& q, const Track& c, const LinkParams& params) {
  if (q.size() < 2 || c.size() < 2) return false;
  const Vec2 end = q.points.back(), start = c.points.front();
  if (distance(end, start) > params.d_thr) return false;
  const Vec2 lq = last_segment(q);
  const Vec2 connector = start - end;
  if (norm(connector) > 0.0 && angle_between(lq, connector) > deg2rad(params.theta_dir_deg)) return false;
  return angle_between(lq, first_segment(c)) <= deg2rad(params.delta_dif_deg);
}

std::vector<std::pair<int, int>> geometric_candidates(std::span<const Track> queries,
                                                      std::span<const Track> candidates,
                                                      const LinkParams& params) {
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      if (geometric_ok(queries[i], candidates[j], params)) out.emplace_back(int(i), int(j));
    }
  }
  return out;
}

std::vector<double> outlier_weights(std::span<const double> S) {
  std::vector<double> w(S.size(), 1.0);
  if (S.empty()) return w;
  const double mu = stats::mean(S);
  const double sd = stats::stddev(S);
  if (sd <= 0.0) return w;
  for (std::size_t i = 0; i < S.size(); ++i) {
    const double z = (S[i] - mu) / sd;
    w[i] = std::exp(-0.5 * z * z);
  }
  return w;
}

Similarity appearance_similarity(const Track& q, const Track& c, int n_a, double alpha, double sigma_a) {
  const int n = clamp_count(n_a, q, c);
  const auto wq = outlier_weights(q.S);
  const auto wc = outlier_weights(c.S);
  const std::size_t qe = q.size() - 1;
  double num = 0.0, z = 0.0, plain = 0.0, wt = 1.0;
  for (int k = 0; k < n; ++k) {
    const std::size_t iq = qe - static_cast<std::size_t>(k), ic = static_cast<std::size_t>(k);
    num += (q.S[iq] * wq[iq] - c.S[ic] * wc[ic]) * wt;
    z += 0.5 * (wq[iq] + wc[ic]) * wt;
    plain += q.S[iq] - c.S[ic];
    wt *= alpha;
  }
  Similarity s;
  double sij;
  if (std::abs(z) < 1e-9) {
    s.degenerate = true;
    sij = plain / n;
  } else {
    sij = num / z;
  }
  s.value = std::exp(-std::abs(sij) / (sigma_a * sigma_a));
  return s;
}

double motion_similarity(const Track& q, const Track& c, int n_v, double alpha, double sigma_m) {
  const int n = clamp_count(n_v, q, c);
  const std::size_t qe = q.size() - 1;
  Vec2 sum;
  double wt = 1.0;
  for (int k = 0; k < n; ++k) {
    sum += wt * (q.v[qe - static_cast<std::size_t>(k)] - c.v[static_cast<std::size_t>(k)]);
    wt *= alpha;
  }
  return std::exp(-norm(sum) / (sigma_m * sigma_m));
}

double motion_prior(const Track& q, const Track& c, const FlowMap& streak, double alpha_mix, double sigma_p,
                    std::uint64_t seed) {
  const Vec2 start = q.points.back(), goal = c.points.front();
  const double gap = distance(start, goal);

  Vec2 mean_v, sd_v;
  for (const Vec2& v : q.v) mean_v += v;
  mean_v *= 1.0 / static_cast<double>(std::max<std::size_t>(1, q.v.size()));
  for (const Vec2& v : q.v) {
    sd_v.x += (v.x - mean_v.x) * (v.x - mean_v.x);
    sd_v.y += (v.y - mean_v.y) * (v.y - mean_v.y);
  }
  sd_v.x = std::sqrt(sd_v.x / std::max<std::size_t>(1, q.v.size()));
  sd_v.y = std::sqrt(sd_v.y / std::max<std::size_t>(1, q.v.size()));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  Vec2 x = start;
  Vec2 vel = q.v.empty() ? Vec2{} : q.v.back();
  Vec2 acc;
  double travelled = 0.0;
  for (int step = 0; step < 1000 && travelled < gap; ++step) {
    const Vec2 flow = streak.empty() ? Vec2{} : streak.sample(x.x, x.y);
    const Vec2 move = vel + 0.5 * acc + flow;
    const double len = norm(move);
    if (len < 1e-9) break;
    if (travelled + len >= gap) {
      x += ((gap - travelled) / len) * move;
      travelled = gap;
      break;
    }
    x += move;
    travelled += len;
    const Vec2 next{mean_v.x + sd_v.x * unit(rng), mean_v.y + sd_v.y * unit(rng)};
    acc = next - vel;
    vel = next;
  }
  const double angular = angle_between(last_segment(q), first_segment(c));
  const double cost = alpha_mix * distance(goal, x) + (1.0 - alpha_mix) * angular;
  return std::exp(-cost / (sigma_p * sigma_p));
}

bool EntropyGate::blocked(Vec2 p, double thresh) const {
  if (map == nullptr || map->cols == 0) return false;
  const int col = std::clamp(static_cast<int>(p.x) / cell_width, 0, map->cols - 1);
  const int row = std::clamp(static_cast<int>(p.y) / cell_height, 0, map->rows - 1);
  return map->at(col, row) > thresh;
}

LinkGraph build_link_graph(std::span<const Track> queries, std::span<const Track> candidates,
                           const FlowMap& streak, const LinkParams& params, const EntropyGate& gate) {
  std::size_t n_min = std::numeric_limits<std::size_t>::max();
  for (const auto& t : queries) n_min = std::min(n_min, t.size());
  for (const auto& t : candidates) n_min = std::min(n_min, t.size());
  if (n_min == std::numeric_limits<std::size_t>::max()) n_min = 1;
  const int n_a = params.n_a > 0 ? params.n_a : std::max(1, static_cast<int>(std::lround(0.7 * n_min)));
  const int n_v = params.n_v > 0 ? params.n_v : std::max(1, static_cast<int>(std::lround(0.35 * n_min)));

  LinkGraph g;
  const std::size_t nq = queries.size();
  g.states.resize(nq);
  g.phi.resize(nq);
  g.mrf.unary.resize(nq);
  for (std::size_t i = 0; i < nq; ++i) {
    const Track& q = queries[i];
    const bool q_open = q.size() >= 2 && !gate.blocked(q.points.back(), params.entropy_thresh);
    for (std::size_t j = 0; q_open && j < candidates.size(); ++j) {
      const Track& c = candidates[j];
      if (gate.blocked(c.points.front(), params.entropy_thresh) || !geometric_ok(q, c, params)) continue;
      const double phi = appearance_similarity(q, c, n_a, params.alpha_decay, params.sigma_a).value *
                         motion_similarity(q, c, n_v, params.alpha_decay, params.sigma_m) *
                         motion_prior(q, c, streak, params.alpha_mix, params.sigma_p, mix_seed(params.seed, i, j));
      if (phi <= 0.0) continue;
      g.states[i].push_back(static_cast<int>(j));
      g.phi[i].push_back(phi);
      g.mrf.unary[i].push_back(-std::log(phi));
    }
    g.states[i].push_back(-1);
    g.phi[i].push_back(0.0);
    g.mrf.unary[i].push_back(params.terminal_cost);
  }

  // Query pairs interact when they compete for a candidate or end close together.
  for (std::size_t i = 0; i < nq; ++i) {
    for (std::size_t k = i + 1; k < nq; ++k) {
      if (g.states[i].size() < 2 || g.states[k].size() < 2) continue;
      bool shared = false;
      for (int a : g.states[i]) {
        if (a >= 0 && std::find(g.states[k].begin(), g.states[k].end(), a) != g.states[k].end()) shared = true;
      }
      const bool near = distance(queries[i].points.back(), queries[k].points.back()) <= params.d_thr;
      if (!shared && !near) continue;
      PairwiseMrf::Edge e{static_cast<int>(i), static_cast<int>(k), {}};
      for (int a : g.states[i]) {
        for (int b : g.states[k]) {
          double cost = 0.0;
          if (a >= 0 && b >= 0) {
            if (a == b) {
              cost = params.exclusion_cost;
            } else if (near) {
              const Vec2 ca = candidates[static_cast<std::size_t>(a)].points.front() - queries[i].points.back();
              const Vec2 cb = candidates[static_cast<std::size_t>(b)].points.front() - queries[k].points.back();
              cost = params.coherence_weight * 0.5 * (1.0 - std::cos(angle_between(ca, cb)));
            }
          }
          e.cost.push_back(cost);
        }
      }
      g.mrf.edges.push_back(std::move(e));
    }
  }
  return g;
}

Linkage build_and_infer(std::span<const Track> queries, std::span<const Track> candidates,
                        const FlowMap& streak, const LinkParams& params, const EntropyGate& gate) {
  const LinkGraph g = build_link_graph(queries, candidates, streak, params, gate);
  Linkage out;
  out.choice.assign(queries.size(), -1);
  out.phi.assign(queries.size(), 0.0);
  if (queries.empty()) return out;
  const TrwResult r = trw_bp(g.mrf, params.trw);
  out.energy = r.energy;
  out.iterations = r.iterations;
  std::vector<int> owner(candidates.size(), -1);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto s = static_cast<std::size_t>(r.labels[i]);
    const int c = g.states[i][s];
    if (c < 0) continue;
    // Exclusion is a finite cost; never let a candidate be consumed twice.
    const int prev = owner[static_cast<std::size_t>(c)];
    if (prev >= 0) {
      if (out.phi[static_cast<std::size_t>(prev)] >= g.phi[i][s]) continue;
      out.choice[static_cast<std::size_t>(prev)] = -1;
      out.phi[static_cast<std::size_t>(prev)] = 0.0;
    }
    owner[static_cast<std::size_t>(c)] = static_cast<int>(i);
    out.choice[i] = c;
    out.phi[i] = g.phi[i][s];
  }
  return out;
}

namespace {

void append_track(Track& chain, const Track& next) {
  chain.points.insert(chain.points.end(), next.points.begin(), next.points.end());
  chain.S.insert(chain.S.end(), next.S.begin(), next.S.end());
  chain.v.insert(chain.v.end(), next.v.begin(), next.v.end());
  chain.t_end = next.t_end;
  chain.window_last = next.window_last;
}

}  // namespace

std::vector<Track> link_windows(std::span<const WindowTracks> windows, const LinkParams& params, int cell_width,
                                int cell_height) {
  std::vector<Track> finished;
  if (windows.empty()) return finished;
  // chains[k] is the chain whose tail is track k of the current window.
  std::vector<Track> chains(windows[0].tracks.begin(), windows[0].tracks.end());
  for (std::size_t w = 0; w + 1 < windows.size(); ++w) {
    const auto& cur = windows[w].tracks;
    const auto& nxt = windows[w + 1].tracks;
    EntropyGate gate;
    if (windows[w].entropy) gate = {&*windows[w].entropy, cell_width, cell_height};
    LinkParams p = params;
    p.seed = params.seed + w;
    const Linkage link = build_and_infer(cur, nxt, windows[w].streak, p, gate);
    std::vector<Track> next_chains(nxt.begin(), nxt.end());
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const int c = link.choice[i];
      if (c < 0) {
        finished.push_back(std::move(chains[i]));
        continue;
      }
      Track merged = std::move(chains[i]);
      append_track(merged, nxt[static_cast<std::size_t>(c)]);
      next_chains[static_cast<std::size_t>(c)] = std::move(merged);
    }
    chains = std::move(next_chains);
  }
  for (auto& c : chains) finished.push_back(std::move(c));
  std::stable_sort(finished.begin(), finished.end(), [](const Track& a, const Track& b) {
    return std::tie(a.window_first, a.id) < std::tie(b.window_first, b.id);
  });
  return finished;
}

std::vector<Track> prune(std::span<const Track> tracks) {
  std::vector<Track> out;
  if (tracks.empty()) return out;
  double mean = 0.0;
  for (const auto& t : tracks) mean += static_cast<double>(t.size());
  mean /= static_cast<double>(tracks.size());
  for (const auto& t : tracks) {
    if (static_cast<double>(t.size()) >= mean) out.push_back(t);
  }
  return out;
}

}  // namespace flowtraj
