#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "satdesign/graph.hpp"

namespace satdesign {

// Y_i = alpha_i + beta_i Z_i + gamma_i rho_i, rho_i the treated fraction of
// i's neighbours (0 for isolated units).
struct LinearModel {
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> gamma;

  int size() const { return static_cast<int>(alpha.size()); }
  void validate(int n) const;
  bool sutva() const;
};

std::vector<double> evaluate(const LinearModel& m, const Graph& g, std::span<const std::uint8_t> z);
void evaluate_into(const LinearModel& m, const Graph& g, std::span<const std::uint8_t> z, std::vector<double>& y);

// mean(beta) + mean(gamma)
double total_treatment_effect(const LinearModel& m);

struct PotentialOutcomes {
  std::vector<double> y0;
  std::vector<double> y1;
};

// y0 = alpha, y1 = alpha + beta. Requires gamma == 0.
PotentialOutcomes sutva_outcomes(const LinearModel& m);
double total_treatment_effect(const PotentialOutcomes& po);

bool block_fixed_gamma(const LinearModel& m, const Clustering& c, double tol = 1e-9);

// Interference tensors. T_ik = gamma_i / |N_i| on edges, D_ik = T_ik + T_ki.
struct ExposureTensors {
  int N = 0;
  int M = 0;
  std::vector<double> T;           // per adjacency slot of i (same layout as Graph)
  std::vector<double> D;           // per adjacency slot of i
  std::vector<double> H;           // H_i = sum_{k in N_i} gamma_k / |N_k|
  Eigen::MatrixXd Dl;              // N x M, D_i^{(l)} = sum_{k in C_l} D_ik
  Eigen::MatrixXd Tblock;          // T^{(jl)} = sum_{i in C_j, k in C_l} T_ik
  Eigen::MatrixXd Dblock;          // D^{(jl)}
  Eigen::MatrixXd cross;           // cross_var of the D_jl block
  std::vector<double> within_sq;   // sum_{i,k in C_j} D_ik^2
  std::vector<double> within_deg2; // sum_{i in C_j} (D_i^{(j)})^2
};

ExposureTensors exposure_tensors(const LinearModel& m, const Graph& g, const Clustering& c);

struct ValueDist {
  enum class Kind { Constant, Normal, Uniform };
  Kind kind = Kind::Constant;
  double a = 0.0;  // value, mean or lower bound
  double b = 0.0;  // sd or upper bound
};

// A unit's coefficient is cluster_draw[c(i)] + unit_draw[i], optionally
// centred within clusters afterwards.
struct ComponentSpec {
  ValueDist cluster;
  ValueDist unit;
  bool center_within_clusters = false;
};

struct OutcomeSpec {
  ComponentSpec alpha;
  ComponentSpec beta{{ValueDist::Kind::Constant, 1.0, 0.0}, {}, false};
  ComponentSpec gamma;
};

LinearModel generate_outcomes(const OutcomeSpec& spec, const Clustering& c, std::uint64_t seed);

}  // namespace satdesign
