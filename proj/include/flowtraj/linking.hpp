#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "flowtraj/cell_grid.hpp"
#include "flowtraj/streamlines.hpp"
#include "flowtraj/trw.hpp"

namespace flowtraj {

/// A streamline taking part in linking, or a chain of linked streamlines.
struct Track {
  int id = 0;
  std::vector<Vec2> points;
  std::vector<double> S;   // cosine of the streak flow angle at each point
  std::vector<Vec2> v;     // streak flow velocity at each point, px/step
  int t_start = 0, t_end = 0;  // mini-batch extent
  int window_first = 0, window_last = 0;

  std::size_t size() const noexcept { return points.size(); }
};

/// Descriptors are read from the streak flow; where it vanishes the local
/// polyline direction stands in for the angle.
Track make_track(std::vector<Vec2> points, const FlowMap& streak, int window, int t_start, int t_end);

struct LinkParams {
  double d_thr = 45.0;
  double theta_dir_deg = 42.0;
  double delta_dif_deg = 40.0;
  double alpha_decay = 0.9;
  double alpha_mix = 0.5;
  double sigma_a = 1.0, sigma_m = 1.0, sigma_p = 1.0;
  int n_a = 0, n_v = 0;  // 0: 0.7 and 0.35 of the shortest participating track
  double terminal_cost = -std::log(0.05);
  double entropy_thresh = 2.5;
  double exclusion_cost = 1e3;
  double coherence_weight = 0.05;
  std::uint64_t seed = 0;
  TrwOptions trw;
};

bool geometric_ok(const Track& q, const Track& c, const LinkParams& params);

/// (query index, candidate index) pairs passing the three geometric checks.
std::vector<std::pair<int, int>> geometric_candidates(std::span<const Track> queries,
                                                      std::span<const Track> candidates,
                                                      const LinkParams& params);

/// Peak-normalised Gaussian typicality of each S value within its track.
std::vector<double> outlier_weights(std::span<const double> S);

struct Similarity {
  double value = 1.0;
  bool degenerate = false;  // normaliser vanished; unweighted mean used
};

Similarity appearance_similarity(const Track& q, const Track& c, int n_a, double alpha, double sigma_a);
double motion_similarity(const Track& q, const Track& c, int n_v, double alpha, double sigma_m);
double motion_prior(const Track& q, const Track& c, const FlowMap& streak, double alpha_mix, double sigma_p,
                    std::uint64_t seed);

/// Optional entropy gate: tracks ending (queries) or starting (candidates)
/// in cells above the threshold are kept out of the graph.
struct EntropyGate {
  const EntropyMap* map = nullptr;
  int cell_width = 15, cell_height = 15;

  bool blocked(Vec2 p, double thresh) const;
};

struct Linkage {
  std::vector<int> choice;  // candidate index per query, -1 for terminal
  std::vector<double> phi;  // unary compatibility of the chosen candidate (0 for terminal)
  double energy = 0.0;
  int iterations = 0;
};

struct LinkGraph {
  PairwiseMrf mrf;
  std::vector<std::vector<int>> states;  // candidate index per state; terminal is last (-1)
  std::vector<std::vector<double>> phi;
};

LinkGraph build_link_graph(std::span<const Track> queries, std::span<const Track> candidates,
                           const FlowMap& streak, const LinkParams& params, const EntropyGate& gate = {});

Linkage build_and_infer(std::span<const Track> queries, std::span<const Track> candidates,
                        const FlowMap& streak, const LinkParams& params, const EntropyGate& gate = {});

struct WindowTracks {
  std::vector<Track> tracks;
  FlowMap streak;  // averaged streak flow of the window
  std::optional<EntropyMap> entropy;
};

/// Links each window's tracks to the next window's and concatenates chains.
std::vector<Track> link_windows(std::span<const WindowTracks> windows, const LinkParams& params,
                                int cell_width = 15, int cell_height = 15);

/// Keeps tracks with at least the mean point count.
std::vector<Track> prune(std::span<const Track> tracks);

}  // namespace flowtraj
