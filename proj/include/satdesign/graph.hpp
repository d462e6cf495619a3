#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace satdesign {

// Simple undirected graph in CSR form. Neighbour lists are sorted.
class Graph {
 public:
  Graph() = default;
  // Validates: endpoints in range, no self loops, no duplicate edges.
  static Graph from_edges(int n, const std::vector<std::pair<int, int>>& edges);

  int num_nodes() const { return n_; }
  std::size_t num_edges() const { return adj_.size() / 2; }
  int degree(int i) const { return static_cast<int>(offsets_[i + 1] - offsets_[i]); }
  std::span<const int> neighbors(int i) const {
    return {adj_.data() + offsets_[i], static_cast<std::size_t>(offsets_[i + 1] - offsets_[i])};
  }
  // Offset of i's first neighbour in the flat adjacency array; per-edge
  // arrays (one entry per directed pair) use the same layout.
  std::int64_t offset(int i) const { return offsets_[i]; }
  std::vector<std::pair<int, int>> edge_list() const;

 private:
  int n_ = 0;
  std::vector<std::int64_t> offsets_{0};
  std::vector<int> adj_;
};

// Partition of units 0..N-1 into M non-empty clusters.
class Clustering {
 public:
  Clustering() = default;
  explicit Clustering(std::vector<int> cluster_of);
  // Units 0..N-1 assigned to consecutive blocks of the given sizes.
  static Clustering from_sizes(const std::vector<int>& sizes);

  int num_units() const { return static_cast<int>(cluster_of_.size()); }
  int num_clusters() const { return static_cast<int>(members_.size()); }
  int cluster_of(int i) const { return cluster_of_[i]; }
  int size(int j) const { return static_cast<int>(members_[j].size()); }
  const std::vector<int>& members(int j) const { return members_[j]; }
  std::vector<int> sizes() const;
  bool equal_sizes() const;
  const std::vector<int>& assignment() const { return cluster_of_; }

 private:
  std::vector<int> cluster_of_;
  std::vector<std::vector<int>> members_;
};

struct GraphStats {
  int N = 0;
  int M = 0;
  std::vector<int> sizes;
  // p_jl = sum_{i in C_j} |N_i ∩ C_l| / (N_j N_l); within-cluster edges count twice.
  Eigen::MatrixXd P;
  // Row-normalized P. Rows of clusters without edges stay zero and are listed
  // in undefined_q_rows.
  Eigen::MatrixXd Q;
  std::vector<int> undefined_q_rows;
  int min_degree = 0;
  int max_degree = 0;
  int isolated = 0;
};

GraphStats graph_stats(const Graph& g, const Clustering& c);

// Draws an SBM graph. Edge (i, k) is present with probability A(c_i, c_k).
Graph sbm_generate(const Clustering& c, const Eigen::MatrixXd& A, std::uint64_t seed);

// A_jl = exp(-rate |j - l|).
Eigen::MatrixXd decay_block_matrix(int M, double rate);

// N^{-1} sum_i gamma_i |N_i ∩ C_{c(i)}| / |N_i|; isolated units contribute 0.
double gamma_prime(const Graph& g, const Clustering& c, std::span<const double> gamma);

// True when no edge crosses clusters.
bool is_perfect_clustering(const Graph& g, const Clustering& c);

struct AssumptionReport {
  double dense_threshold = 0.0;  // eps2 N / M
  bool dense_ok = false;
  // max over (i, l) of | |N_i ∩ C_l| / N_l - p_jl | / sqrt(p_jl log(NM) / N_l)
  double edge_prob_max_ratio = 0.0;
  bool edge_prob_ok = false;
  std::optional<double> unconfounded_max_ratio;
  std::optional<bool> unconfounded_ok;
};

AssumptionReport check_assumptions(const Graph& g, const Clustering& c, const GraphStats& s, double eps2,
                                   double eps3, std::span<const double> f = {}, double eps_f = 0.0);

// Lower bounds on the probability that an SBM(A) draw satisfies each check.
double dense_probability_bound(int N, int M, double min_row_sum, double eps2);
double edge_probability_bound(int N, int M, double eps3);
double unconfounded_probability_bound(int N, int M, double eps_f, double f_sup_norm);

}  // namespace satdesign
