#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "satdesign/graph.hpp"
#include "satdesign/rng.hpp"

namespace satdesign {

enum class DesignMode { Independent, Permutation, Deterministic };

struct Distribution {
  enum class Kind { PointMass, TwoPoint, Beta, QuantileTable };
  Kind kind = Kind::PointMass;
  double a = 0.5;  // point / low value / Beta shape
  double b = 0.5;  // high value
  double p = 0.5;  // P(low) for TwoPoint
  std::vector<double> table;

  double sample(StreamRng& rng) const;
  bool discrete() const { return kind != Kind::Beta; }
  // (value, probability) pairs; only for discrete kinds.
  std::vector<std::pair<double, double>> support() const;
  void validate() const;
};

struct Design {
  DesignMode mode = DesignMode::Permutation;
  std::vector<double> pi;  // Permutation / Deterministic
  Distribution dist;       // Independent
  void validate(int M) const;
};

// n_j = floor(pi_j N_j + 1e-9)
std::vector<int> treated_counts(std::span<const double> pi, const Clustering& c);
// As treated_counts but raises ConsistencyError unless pi_j N_j is integral.
std::vector<int> exact_treated_counts(std::span<const double> pi, const Clustering& c);
bool integer_consistent(std::span<const double> pi, const Clustering& c);

std::vector<double> stratified_pi(int M, double mean);
// First M - treated entries 0, the rest 1.
std::vector<double> cluster_based_pi(int M, int treated);

// pi_j = F^{-1}(j / (M + 1)) for Beta(lambda, lambda); lambda = 0 and
// lambda = inf are the cluster-based and stratified limits.
std::vector<double> beta_quantile_pi(double lambda, int M);
// floor(M/2) clusters at mean - d, floor(M/2) at mean + d, middle one at mean.
std::vector<double> two_point_pi(int M, double mean, double d);
// round(fraction M) clusters at each of mean - h and mean + h, rest at mean,
// h = min(mean, 1 - mean).
std::vector<double> three_point_pi(int M, double mean, double fraction);

std::vector<double> sample_saturations(const Design& d, int M, std::uint64_t seed, std::uint64_t rep);

struct Assignment {
  std::vector<std::uint8_t> z;
  std::vector<double> pi;
  std::vector<int> counts;
  int n_t = 0;
  bool degenerate() const { return n_t == 0 || n_t == static_cast<int>(z.size()); }
};

Assignment sample_assignment(const Design& d, const Clustering& c, std::uint64_t seed, std::uint64_t rep);
// Treats exactly counts[j] uniformly chosen units of every cluster j.
void assign_within_clusters(std::span<const int> counts, const Clustering& c, std::uint64_t seed, std::uint64_t rep,
                            std::vector<std::uint8_t>& z);

}  // namespace satdesign
