#pragma once

#include <cstdint>
#include <vector>

#include "satdesign/graph.hpp"
#include "satdesign/outcomes.hpp"
#include "satdesign/rng.hpp"

namespace satdesign::testing {

struct Instance {
  Clustering c;
  Graph g;
  LinearModel m;
};

// Random sparse graph on the given clusters with random coefficients.
inline Instance random_instance(const std::vector<int>& sizes, double p_edge, std::uint64_t seed,
                                bool interference = true) {
  Clustering c = Clustering::from_sizes(sizes);
  const int N = c.num_units();
  StreamRng rng(seed, 0, Stage::Graph, 99);
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < N; ++i)
    for (int k = i + 1; k < N; ++k)
      if (rng.uniform() < p_edge) e.emplace_back(i, k);
  Graph g = Graph::from_edges(N, e);
  LinearModel m;
  for (int i = 0; i < N; ++i) {
    m.alpha.push_back(4.0 * rng.uniform() - 2.0 + 0.5 * c.cluster_of(i));
    m.beta.push_back(1.0 + rng.uniform());
    m.gamma.push_back(interference ? 2.0 * rng.uniform() - 0.5 : 0.0);
  }
  return {std::move(c), std::move(g), std::move(m)};
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace satdesign::testing
