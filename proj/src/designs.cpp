#include "satdesign/designs.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "satdesign/errors.hpp"
#include "satdesign/stats.hpp"

namespace satdesign {

void Distribution::validate() const {
  switch (kind) {
    case Kind::PointMass:
      if (!(a >= 0.0 && a <= 1.0)) throw DomainError("point mass must lie in [0, 1]");
      break;
    case Kind::TwoPoint:
      if (!(a >= 0.0 && a <= 1.0 && b >= 0.0 && b <= 1.0)) throw DomainError("two-point values must lie in [0, 1]");
      if (!(p >= 0.0 && p <= 1.0)) throw DomainError("two-point probability must lie in [0, 1]");
      break;
    case Kind::Beta:
      if (!(a > 0.0) || !(b > 0.0)) throw DomainError("beta shapes must be positive");
      break;
    case Kind::QuantileTable:
      if (table.empty()) throw InvalidInput("quantile table is empty");
      for (double v : table)
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("quantile table values must lie in [0, 1]");
      break;
  }
}

double Distribution::sample(StreamRng& rng) const {
  switch (kind) {
    case Kind::PointMass:
      return a;
    case Kind::TwoPoint:
      return rng.uniform() < p ? a : b;
    case Kind::Beta:
      return beta_quantile(a, b, rng.uniform_open());
    case Kind::QuantileTable:
      return table[rng.below(table.size())];
  }
  return a;
}

std::vector<std::pair<double, double>> Distribution::support() const {
  switch (kind) {
    case Kind::PointMass:
      return {{a, 1.0}};
    case Kind::TwoPoint:
      return {{a, p}, {b, 1.0 - p}};
    case Kind::Beta:
      throw UnsupportedConfiguration("a Beta saturation law has no finite support");
    case Kind::QuantileTable: {
      std::vector<std::pair<double, double>> s;
      for (double v : table) s.emplace_back(v, 1.0 / static_cast<double>(table.size()));
      return s;
    }
  }
  return {};
}

void Design::validate(int M) const {
  if (mode == DesignMode::Independent) {
    dist.validate();
    return;
  }
  if (static_cast<int>(pi.size()) != M)
    throw InvalidInput("design: saturation vector has " + std::to_string(pi.size()) + " entries, expected " +
                       std::to_string(M));
  for (double p : pi)
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("design: saturations must lie in [0, 1]");
}

std::vector<int> treated_counts(std::span<const double> pi, const Clustering& c) {
  if (static_cast<int>(pi.size()) != c.num_clusters()) throw InvalidInput("saturation vector length mismatch");
  std::vector<int> n(pi.size());
  for (std::size_t j = 0; j < pi.size(); ++j) {
    if (!(pi[j] >= 0.0 && pi[j] <= 1.0)) throw DomainError("saturations must lie in [0, 1]");
    n[j] = static_cast<int>(std::floor(pi[j] * c.size(static_cast<int>(j)) + 1e-9));
  }
  return n;
}

bool integer_consistent(std::span<const double> pi, const Clustering& c) {
  if (static_cast<int>(pi.size()) != c.num_clusters()) return false;
  for (std::size_t j = 0; j < pi.size(); ++j) {
    const double x = pi[j] * c.size(static_cast<int>(j));
    if (std::fabs(x - std::round(x)) > 1e-9) return false;
  }
  return true;
}

std::vector<int> exact_treated_counts(std::span<const double> pi, const Clustering& c) {
  if (!integer_consistent(pi, c))
    throw ConsistencyError("saturation vector is not integer consistent: pi_j N_j must be whole");
  return treated_counts(pi, c);
}

std::vector<double> stratified_pi(int M, double mean) {
  if (M < 1) throw InvalidInput("stratified_pi: M must be positive");
  if (!(mean >= 0.0 && mean <= 1.0)) throw DomainError("stratified_pi: mean must lie in [0, 1]");
  return std::vector<double>(M, mean);
}

std::vector<double> cluster_based_pi(int M, int treated) {
  if (M < 1) throw InvalidInput("cluster_based_pi: M must be positive");
  if (treated < 0 || treated > M) throw DomainError("cluster_based_pi: treated clusters outside [0, M]");
  std::vector<double> pi(M, 0.0);
  std::fill(pi.end() - treated, pi.end(), 1.0);
  return pi;
}

std::vector<double> beta_quantile_pi(double lambda, int M) {
  if (M < 1) throw InvalidInput("beta_quantile_pi: M must be positive");
  if (!(lambda >= 0.0)) throw DomainError("beta_quantile_pi: lambda must be >= 0");
  std::vector<double> pi(M, 0.5);
  const int half = M / 2;
  for (int j = 1; j <= half; ++j) {
    double v;
    if (lambda == 0.0)
      v = 0.0;
    else if (std::isinf(lambda))
      v = 0.5;
    else
      v = beta_quantile(lambda, lambda, static_cast<double>(j) / (M + 1));
    pi[j - 1] = v;
    pi[M - j] = 1.0 - v;
  }
  return pi;
}

std::vector<double> two_point_pi(int M, double mean, double d) {
  if (M < 1) throw InvalidInput("two_point_pi: M must be positive");
  if (d < 0.0 || mean - d < -1e-12 || mean + d > 1.0 + 1e-12)
    throw DomainError("two_point_pi: mean +- d must stay in [0, 1]");
  std::vector<double> pi(M, mean);
  for (int j = 0; j < M / 2; ++j) {
    pi[j] = std::max(0.0, mean - d);
    pi[M - 1 - j] = std::min(1.0, mean + d);
  }
  return pi;
}

std::vector<double> three_point_pi(int M, double mean, double fraction) {
  if (M < 1) throw InvalidInput("three_point_pi: M must be positive");
  if (!(mean >= 0.0 && mean <= 1.0)) throw DomainError("three_point_pi: mean must lie in [0, 1]");
  if (!(fraction >= 0.0 && fraction <= 0.5)) throw DomainError("three_point_pi: fraction must lie in [0, 1/2]");
  const double h = std::min(mean, 1.0 - mean);
  const int k = static_cast<int>(std::llround(fraction * M));
  if (2 * k > M) throw DomainError("three_point_pi: extremes exceed M clusters");
  std::vector<double> pi(M, mean);
  for (int j = 0; j < k; ++j) {
    pi[j] = mean - h;
    pi[M - 1 - j] = mean + h;
  }
  return pi;
}

std::vector<double> sample_saturations(const Design& d, int M, std::uint64_t seed, std::uint64_t rep) {
  d.validate(M);
  switch (d.mode) {
    case DesignMode::Deterministic:
      return d.pi;
    case DesignMode::Permutation: {
      std::vector<double> pi = d.pi;
      StreamRng rng(seed, rep, Stage::Permutation, 0);
      for (int j = M - 1; j > 0; --j) std::swap(pi[j], pi[rng.below(static_cast<std::uint64_t>(j) + 1)]);
      return pi;
    }
    case DesignMode::Independent: {
      std::vector<double> pi(M);
      for (int j = 0; j < M; ++j) {
        StreamRng rng(seed, rep, Stage::Saturation, static_cast<std::uint64_t>(j));
        pi[j] = d.dist.sample(rng);
      }
      return pi;
    }
  }
  return {};
}

void assign_within_clusters(std::span<const int> counts, const Clustering& c, std::uint64_t seed, std::uint64_t rep,
                            std::vector<std::uint8_t>& z) {
  z.assign(c.num_units(), 0);
  std::vector<int> pool;
  for (int j = 0; j < c.num_clusters(); ++j) {
    const int nj = counts[j];
    const int Nj = c.size(j);
    if (nj < 0 || nj > Nj) throw DomainError("treated count outside [0, N_j]");
    if (nj == 0) continue;
    if (nj == Nj) {
      for (int i : c.members(j)) z[i] = 1;
      continue;
    }
    pool = c.members(j);
    StreamRng rng(seed, rep, Stage::Assignment, static_cast<std::uint64_t>(j));
    for (int s = 0; s < nj; ++s) {
      const auto r = s + static_cast<int>(rng.below(static_cast<std::uint64_t>(Nj - s)));
      std::swap(pool[s], pool[r]);
      z[pool[s]] = 1;
    }
  }
}

Assignment sample_assignment(const Design& d, const Clustering& c, std::uint64_t seed, std::uint64_t rep) {
  Assignment a;
  a.pi = sample_saturations(d, c.num_clusters(), seed, rep);
  a.counts = treated_counts(a.pi, c);
  assign_within_clusters(a.counts, c, seed, rep, a.z);
  a.n_t = std::accumulate(a.counts.begin(), a.counts.end(), 0);
  return a;
}

}  // namespace satdesign
