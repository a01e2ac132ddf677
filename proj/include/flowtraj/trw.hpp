#pragma once

#include <vector>

namespace flowtraj {

/// Discrete pairwise MRF in energy form (costs, lower is better).
struct PairwiseMrf {
  struct Edge {
    int i = 0, j = 0;
    std::vector<double> cost;  // |L_i| x |L_j|, row-major in the state of i
  };

  std::vector<std::vector<double>> unary;
  std::vector<Edge> edges;

  int node_count() const noexcept { return static_cast<int>(unary.size()); }
  int states(int i) const { return static_cast<int>(unary[static_cast<std::size_t>(i)].size()); }
  double energy(const std::vector<int>& labels) const;
};

struct TrwOptions {
  double damping = 0.5;
  int max_iterations = 100;
  double tolerance = 1e-6;
};

struct TrwResult {
  std::vector<int> labels;
  double energy = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Tree-reweighted min-sum belief propagation with uniform edge appearance
/// probabilities per connected component, followed by sequential decoding
/// and an iterated-conditional-modes polish.
TrwResult trw_bp(const PairwiseMrf& mrf, const TrwOptions& options = {});

}  // namespace flowtraj
