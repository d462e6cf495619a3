#include "satdesign/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "satdesign/errors.hpp"
#include "satdesign/rng.hpp"

namespace satdesign {

Graph Graph::from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  if (n < 0) throw InvalidInput("graph: negative node count");
  Graph g;
  g.n_ = n;
  std::vector<std::int64_t> deg(n, 0);
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n)
      throw InvalidInput("graph: edge (" + std::to_string(u) + "," + std::to_string(v) + ") out of range");
    if (u == v) throw InvalidInput("graph: self loop at " + std::to_string(u));
    ++deg[u];
    ++deg[v];
  }
  g.offsets_.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) g.offsets_[i + 1] = g.offsets_[i] + deg[i];
  g.adj_.assign(g.offsets_[n], 0);
  std::vector<std::int64_t> pos(g.offsets_.begin(), g.offsets_.end() - 1);
  for (auto [u, v] : edges) {
    g.adj_[pos[u]++] = v;
    g.adj_[pos[v]++] = u;
  }
  for (int i = 0; i < n; ++i) {
    auto b = g.adj_.begin() + g.offsets_[i];
    auto e = g.adj_.begin() + g.offsets_[i + 1];
    std::sort(b, e);
    if (std::adjacent_find(b, e) != e) throw InvalidInput("graph: duplicate edge at node " + std::to_string(i));
  }
  return g;
}

std::vector<std::pair<int, int>> Graph::edge_list() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(num_edges());
  for (int i = 0; i < n_; ++i)
    for (int k : neighbors(i))
      if (i < k) out.emplace_back(i, k);
  return out;
}

Clustering::Clustering(std::vector<int> cluster_of) : cluster_of_(std::move(cluster_of)) {
  int M = 0;
  for (int c : cluster_of_) {
    if (c < 0) throw InvalidInput("clustering: negative cluster id");
    M = std::max(M, c + 1);
  }
  members_.assign(M, {});
  for (int i = 0; i < static_cast<int>(cluster_of_.size()); ++i) members_[cluster_of_[i]].push_back(i);
  for (int j = 0; j < M; ++j)
    if (members_[j].empty()) throw InvalidInput("clustering: cluster " + std::to_string(j) + " is empty");
}

Clustering Clustering::from_sizes(const std::vector<int>& sizes) {
  std::vector<int> of;
  for (int j = 0; j < static_cast<int>(sizes.size()); ++j) {
    if (sizes[j] <= 0) throw InvalidInput("clustering: cluster sizes must be positive");
    of.insert(of.end(), sizes[j], j);
  }
  return Clustering(std::move(of));
}

std::vector<int> Clustering::sizes() const {
  std::vector<int> s(members_.size());
  for (std::size_t j = 0; j < members_.size(); ++j) s[j] = static_cast<int>(members_[j].size());
  return s;
}

bool Clustering::equal_sizes() const {
  for (const auto& m : members_)
    if (m.size() != members_.front().size()) return false;
  return true;
}

static void require_match(const Graph& g, const Clustering& c) {
  if (g.num_nodes() != c.num_units()) throw InvalidInput("graph and clustering disagree on the number of units");
}

GraphStats graph_stats(const Graph& g, const Clustering& c) {
  require_match(g, c);
  GraphStats s;
  s.N = c.num_units();
  s.M = c.num_clusters();
  s.sizes = c.sizes();
  s.P = Eigen::MatrixXd::Zero(s.M, s.M);
  s.min_degree = s.N > 0 ? g.degree(0) : 0;
  for (int i = 0; i < s.N; ++i) {
    const int d = g.degree(i);
    s.min_degree = std::min(s.min_degree, d);
    s.max_degree = std::max(s.max_degree, d);
    if (d == 0) ++s.isolated;
    const int j = c.cluster_of(i);
    for (int k : g.neighbors(i)) s.P(j, c.cluster_of(k)) += 1.0;
  }
  for (int j = 0; j < s.M; ++j)
    for (int l = 0; l < s.M; ++l) s.P(j, l) /= static_cast<double>(s.sizes[j]) * s.sizes[l];
  s.Q = s.P;
  for (int j = 0; j < s.M; ++j) {
    const double r = s.P.row(j).sum();
    if (r > 0.0)
      s.Q.row(j) /= r;
    else
      s.undefined_q_rows.push_back(j);
  }
  return s;
}

Graph sbm_generate(const Clustering& c, const Eigen::MatrixXd& A, std::uint64_t seed) {
  const int M = c.num_clusters();
  if (A.rows() != M || A.cols() != M) throw InvalidInput("sbm: block matrix must be M x M");
  for (int j = 0; j < M; ++j)
    for (int l = 0; l < M; ++l) {
      if (!(A(j, l) >= 0.0 && A(j, l) <= 1.0)) throw DomainError("sbm: probabilities must lie in [0, 1]");
      if (A(j, l) != A(l, j)) throw InvalidInput("sbm: block matrix must be symmetric");
    }
  const int N = c.num_units();
  StreamRng rng(seed, 0, Stage::Graph, 0);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < N; ++i) {
    const int ci = c.cluster_of(i);
    for (int k = i + 1; k < N; ++k) {
      if (rng.uniform() < A(ci, c.cluster_of(k))) edges.emplace_back(i, k);
    }
  }
  return Graph::from_edges(N, edges);
}

Eigen::MatrixXd decay_block_matrix(int M, double rate) {
  Eigen::MatrixXd A(M, M);
  for (int j = 0; j < M; ++j)
    for (int l = 0; l < M; ++l) A(j, l) = std::exp(-rate * std::abs(j - l));
  return A;
}

double gamma_prime(const Graph& g, const Clustering& c, std::span<const double> gamma) {
  require_match(g, c);
  if (static_cast<int>(gamma.size()) != c.num_units()) throw InvalidInput("gamma_prime: gamma length mismatch");
  double s = 0.0;
  for (int i = 0; i < c.num_units(); ++i) {
    const int d = g.degree(i);
    if (d == 0) continue;
    int inside = 0;
    for (int k : g.neighbors(i)) inside += c.cluster_of(k) == c.cluster_of(i);
    s += gamma[i] * inside / static_cast<double>(d);
  }
  return s / c.num_units();
}

bool is_perfect_clustering(const Graph& g, const Clustering& c) {
  require_match(g, c);
  for (int i = 0; i < c.num_units(); ++i)
    for (int k : g.neighbors(i))
      if (c.cluster_of(k) != c.cluster_of(i)) return false;
  return true;
}

AssumptionReport check_assumptions(const Graph& g, const Clustering& c, const GraphStats& s, double eps2,
                                   double eps3, std::span<const double> f, double eps_f) {
  require_match(g, c);
  const int N = s.N, M = s.M;
  const double logNM = std::log(static_cast<double>(N) * M);
  AssumptionReport r;
  r.dense_threshold = eps2 * N / M;
  r.dense_ok = s.min_degree >= r.dense_threshold;

  std::vector<int> count(M, 0);
  std::vector<double> fsum(M, 0.0);
  std::vector<double> fbar(M, 0.0);
  if (!f.empty()) {
    if (static_cast<int>(f.size()) != N) throw InvalidInput("check_assumptions: f length mismatch");
    for (int i = 0; i < N; ++i) fbar[c.cluster_of(i)] += f[i];
    for (int j = 0; j < M; ++j) fbar[j] /= s.sizes[j];
  }
  double edge_max = 0.0, unconf_max = 0.0;
  for (int i = 0; i < N; ++i) {
    std::fill(count.begin(), count.end(), 0);
    std::fill(fsum.begin(), fsum.end(), 0.0);
    for (int k : g.neighbors(i)) {
      ++count[c.cluster_of(k)];
      if (!f.empty()) fsum[c.cluster_of(k)] += f[k];
    }
    const int j = c.cluster_of(i);
    for (int l = 0; l < M; ++l) {
      const double Nl = s.sizes[l];
      const double p = s.P(j, l);
      const double dev = std::fabs(count[l] / Nl - p);
      if (p > 0.0) {
        edge_max = std::max(edge_max, dev / std::sqrt(p * logNM / Nl));
      } else if (dev > 0.0) {
        edge_max = std::numeric_limits<double>::infinity();
      }
      if (!f.empty()) {
        const double lhs = std::fabs(fsum[l] / Nl - count[l] / Nl * fbar[l]);
        unconf_max = std::max(unconf_max, lhs / std::sqrt(logNM / Nl));
      }
    }
  }
  r.edge_prob_max_ratio = edge_max;
  r.edge_prob_ok = edge_max <= eps3;
  if (!f.empty()) {
    r.unconfounded_max_ratio = unconf_max;
    r.unconfounded_ok = unconf_max <= eps_f;
  }
  return r;
}

double dense_probability_bound(int N, int M, double min_row_sum, double eps2) {
  if (!(eps2 < min_row_sum)) return 0.0;
  const double a = min_row_sum;
  return 1.0 - std::exp(-static_cast<double>(N) / (4.0 * M * a) * (a - eps2) * (a - eps2));
}

double edge_probability_bound(int N, int M, double eps3) {
  const double b = 1.0 - std::pow(static_cast<double>(N) * M, 1.0 - eps3 * eps3 / 3.0);
  return std::max(0.0, b);
}

double unconfounded_probability_bound(int N, int M, double eps_f, double f_sup_norm) {
  if (f_sup_norm <= 0.0) return 1.0;
  const double b =
      1.0 - std::pow(static_cast<double>(N) * M, 1.0 - eps_f * eps_f / (12.0 * f_sup_norm * f_sup_norm));
  return std::max(0.0, b);
}

}  // namespace satdesign
