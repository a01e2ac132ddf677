#include "flowtraj/trw.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "flowtraj/common.hpp"

namespace flowtraj {

double PairwiseMrf::energy(const std::vector<int>& labels) const {
  double e = 0.0;
  for (std::size_t i = 0; i < unary.size(); ++i) e += unary[i][static_cast<std::size_t>(labels[i])];
  for (const Edge& ed : edges) {
    const int sj = states(ed.j);
    e += ed.cost[static_cast<std::size_t>(labels[ed.i] * sj + labels[ed.j])];
  }
  return e;
}

namespace {

struct Incidence {
  int edge;
  bool forward;  // node is edge.i
};

class Solver {
 public:
  Solver(const PairwiseMrf& mrf, const TrwOptions& opt) : mrf_(mrf), opt_(opt) {
    const int n = mrf.node_count();
    adj_.resize(static_cast<std::size_t>(n));
    for (int e = 0; e < static_cast<int>(mrf.edges.size()); ++e) {
      const auto& ed = mrf.edges[static_cast<std::size_t>(e)];
      if (ed.i == ed.j || ed.i < 0 || ed.j < 0 || ed.i >= n || ed.j >= n) {
        throw Error(ErrorCode::InvalidArgument, "MRF edge endpoints out of range");
      }
      if (ed.cost.size() != static_cast<std::size_t>(mrf.states(ed.i) * mrf.states(ed.j))) {
        throw Error(ErrorCode::DimensionMismatch, "MRF edge table size");
      }
      adj_[static_cast<std::size_t>(ed.i)].push_back({e, true});
      adj_[static_cast<std::size_t>(ed.j)].push_back({e, false});
    }
    compute_rho();
    // msg_[e][0] flows i -> j (indexed by j's state), msg_[e][1] flows j -> i.
    msg_.resize(mrf.edges.size());
    for (std::size_t e = 0; e < mrf.edges.size(); ++e) {
      msg_[e][0].assign(static_cast<std::size_t>(mrf.states(mrf.edges[e].j)), 0.0);
      msg_[e][1].assign(static_cast<std::size_t>(mrf.states(mrf.edges[e].i)), 0.0);
    }
  }

  TrwResult run() {
    TrwResult r;
    for (r.iterations = 0; r.iterations < opt_.max_iterations;) {
      ++r.iterations;
      if (sweep() < opt_.tolerance) {
        r.converged = true;
        break;
      }
    }
    r.labels = decode();
    r.energy = mrf_.energy(r.labels);
    return r;
  }

 private:
  void compute_rho() {
    const int n = mrf_.node_count();
    std::vector<int> comp(static_cast<std::size_t>(n), -1);
    int c = 0;
    for (int s = 0; s < n; ++s) {
      if (comp[static_cast<std::size_t>(s)] >= 0) continue;
      std::vector<int> stack{s};
      comp[static_cast<std::size_t>(s)] = c;
      while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (const auto& inc : adj_[static_cast<std::size_t>(u)]) {
          const auto& ed = mrf_.edges[static_cast<std::size_t>(inc.edge)];
          const int w = inc.forward ? ed.j : ed.i;
          if (comp[static_cast<std::size_t>(w)] < 0) {
            comp[static_cast<std::size_t>(w)] = c;
            stack.push_back(w);
          }
        }
      }
      ++c;
    }
    std::vector<int> nodes(static_cast<std::size_t>(c), 0), edges(static_cast<std::size_t>(c), 0);
    for (int s = 0; s < n; ++s) ++nodes[static_cast<std::size_t>(comp[static_cast<std::size_t>(s)])];
    for (const auto& ed : mrf_.edges) ++edges[static_cast<std::size_t>(comp[static_cast<std::size_t>(ed.i)])];
    rho_.resize(mrf_.edges.size());
    for (std::size_t e = 0; e < mrf_.edges.size(); ++e) {
      const auto k = static_cast<std::size_t>(comp[static_cast<std::size_t>(mrf_.edges[e].i)]);
      rho_[e] = std::min(1.0, static_cast<double>(nodes[k] - 1) / edges[k]);
    }
  }

  const std::vector<double>& incoming(std::size_t e, bool to_i) const { return msg_[e][to_i ? 1 : 0]; }

  /// theta_s + sum_v rho_vs m_vs, the reweighted belief of node s.
  std::vector<double> belief(int s) const {
    std::vector<double> b = mrf_.unary[static_cast<std::size_t>(s)];
    for (const auto& inc : adj_[static_cast<std::size_t>(s)]) {
      const auto e = static_cast<std::size_t>(inc.edge);
      const auto& m = incoming(e, inc.forward);
      for (std::size_t x = 0; x < b.size(); ++x) b[x] += rho_[e] * m[x];
    }
    return b;
  }

  double sweep() {
    double change = 0.0;
    auto next = msg_;
    for (std::size_t e = 0; e < mrf_.edges.size(); ++e) {
      const auto& ed = mrf_.edges[e];
      const int si = mrf_.states(ed.i), sj = mrf_.states(ed.j);
      const double rho = rho_[e];
      for (int dir = 0; dir < 2; ++dir) {
        // dir 0: from i to j, dir 1: from j to i.
        const int src = dir == 0 ? ed.i : ed.j;
        const int ns = dir == 0 ? si : sj, nt = dir == 0 ? sj : si;
        const std::vector<double> b = belief(src);
        const auto& back = msg_[e][dir == 0 ? 1 : 0];
        std::vector<double> out(static_cast<std::size_t>(nt), std::numeric_limits<double>::infinity());
        for (int xs = 0; xs < ns; ++xs) {
          const double base = b[static_cast<std::size_t>(xs)] - back[static_cast<std::size_t>(xs)];
          for (int xt = 0; xt < nt; ++xt) {
            const std::size_t cell = dir == 0 ? static_cast<std::size_t>(xs * sj + xt)
                                              : static_cast<std::size_t>(xt * sj + xs);
            out[static_cast<std::size_t>(xt)] =
                std::min(out[static_cast<std::size_t>(xt)], base + ed.cost[cell] / rho);
          }
        }
        const double lo = *std::min_element(out.begin(), out.end());
        auto& dst = next[e][static_cast<std::size_t>(dir)];
        for (int xt = 0; xt < nt; ++xt) {
          const double v = (1.0 - opt_.damping) * (out[static_cast<std::size_t>(xt)] - lo) +
                           opt_.damping * dst[static_cast<std::size_t>(xt)];
          change = std::max(change, std::abs(v - dst[static_cast<std::size_t>(xt)]));
          dst[static_cast<std::size_t>(xt)] = v;
        }
      }
    }
    msg_ = std::move(next);
    return change;
  }

  double edge_cost(const PairwiseMrf::Edge& ed, int xi, int xj) const {
    return ed.cost[static_cast<std::size_t>(xi * mrf_.states(ed.j) + xj)];
  }

  /// Conditional cost of node s taking x given the decided labels; undecided
  /// neighbours contribute their reweighted messages.
  double conditional(int s, int x, const std::vector<int>& labels, bool use_messages) const {
    double c = mrf_.unary[static_cast<std::size_t>(s)][static_cast<std::size_t>(x)];
    for (const auto& inc : adj_[static_cast<std::size_t>(s)]) {
      const auto e = static_cast<std::size_t>(inc.edge);
      const auto& ed = mrf_.edges[e];
      const int other = inc.forward ? ed.j : ed.i;
      const int lo = labels[static_cast<std::size_t>(other)];
      if (lo >= 0) {
        c += inc.forward ? edge_cost(ed, x, lo) : edge_cost(ed, lo, x);
      } else if (use_messages) {
        c += rho_[e] * incoming(e, inc.forward)[static_cast<std::size_t>(x)];
      }
    }
    return c;
  }

  int argmin_state(int s, const std::vector<int>& labels, bool use_messages) const {
    int best = 0;
    double bc = std::numeric_limits<double>::infinity();
    for (int x = 0; x < mrf_.states(s); ++x) {
      const double c = conditional(s, x, labels, use_messages);
      if (c < bc) {
        bc = c;
        best = x;
      }
    }
    return best;
  }

  void polish(std::vector<int>& labels) const {
    for (int pass = 0; pass < 50; ++pass) {
      bool moved = false;
      for (int s = 0; s < mrf_.node_count(); ++s) {
        const int cur = labels[static_cast<std::size_t>(s)];
        labels[static_cast<std::size_t>(s)] = -1;
        const double keep = conditional(s, cur, labels, false);
        const int best = argmin_state(s, labels, false);
        const bool better = conditional(s, best, labels, false) < keep - 1e-12;
        labels[static_cast<std::size_t>(s)] = better ? best : cur;
        moved = moved || better;
      }
      if (!moved) break;
    }
  }

  /// Joint re-optimisation of the two endpoints of each edge, which lets
  /// exclusion-coupled nodes trade states.
  bool polish_pairs(std::vector<int>& labels) const {
    bool moved = false;
    for (const auto& ed : mrf_.edges) {
      const int a = labels[static_cast<std::size_t>(ed.i)], b = labels[static_cast<std::size_t>(ed.j)];
      const double cur = mrf_.energy(labels);
      int ba = a, bb = b;
      double best = cur;
      for (int xa = 0; xa < mrf_.states(ed.i); ++xa) {
        for (int xb = 0; xb < mrf_.states(ed.j); ++xb) {
          labels[static_cast<std::size_t>(ed.i)] = xa;
          labels[static_cast<std::size_t>(ed.j)] = xb;
          const double e = mrf_.energy(labels);
          if (e < best - 1e-12) {
            best = e;
            ba = xa;
            bb = xb;
          }
        }
      }
      labels[static_cast<std::size_t>(ed.i)] = ba;
      labels[static_cast<std::size_t>(ed.j)] = bb;
      moved = moved || ba != a || bb != b;
    }
    return moved;
  }

  std::vector<int> sequential(const std::vector<int>& order) const {
    std::vector<int> labels(static_cast<std::size_t>(mrf_.node_count()), -1);
    for (int s : order) labels[static_cast<std::size_t>(s)] = argmin_state(s, labels, true);
    for (int round = 0; round < 20; ++round) {
      polish(labels);
      if (!polish_pairs(labels)) break;
    }
    return labels;
  }

  std::vector<int> decode() const {
    const int n = mrf_.node_count();
    std::vector<int> natural(static_cast<std::size_t>(n));
    std::iota(natural.begin(), natural.end(), 0);

    // Most decisive beliefs first: the gap between the two lowest belief values.
    std::vector<double> margin(static_cast<std::size_t>(n), 0.0);
    for (int s = 0; s < n; ++s) {
      auto b = belief(s);
      std::sort(b.begin(), b.end());
      margin[static_cast<std::size_t>(s)] = b.size() > 1 ? b[1] - b[0] : 0.0;
    }
    std::vector<int> confident = natural;
    std::stable_sort(confident.begin(), confident.end(), [&](int a, int b) {
      return margin[static_cast<std::size_t>(a)] > margin[static_cast<std::size_t>(b)];
    });
    std::vector<int> reversed(natural.rbegin(), natural.rend());

    std::vector<int> best;
    double best_energy = std::numeric_limits<double>::infinity();
    for (const auto& order : {natural, confident, reversed}) {
      auto labels = sequential(order);
      const double e = mrf_.energy(labels);
      if (e < best_energy - 1e-12) {
        best_energy = e;
        best = std::move(labels);
      }
    }
    return best;
  }

  const PairwiseMrf& mrf_;
  const TrwOptions& opt_;
  std::vector<std::vector<Incidence>> adj_;
  std::vector<double> rho_;
  std::vector<std::array<std::vector<double>, 2>> msg_;
};

}  // namespace

TrwResult trw_bp(const PairwiseMrf& mrf, const TrwOptions& options) {
  for (const auto& u : mrf.unary) {
    if (u.empty()) throw Error(ErrorCode::InvalidArgument, "MRF node without states");
  }
  if (mrf.node_count() == 0) return {};
  return Solver(mrf, options).run();
}

}  // namespace flowtraj
