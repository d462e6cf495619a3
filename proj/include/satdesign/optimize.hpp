#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <vector>

#include "satdesign/analytics.hpp"
#include "satdesign/objective.hpp"
#include "satdesign/stats.hpp"

namespace satdesign {

double variance_from_moments(const VarianceCoefficients& v, const DesignMoments& m);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};
// Attainable mu2c for a fixed mean: [0, mean (1 - mean)].
Interval variance_bound_pi(double mean);
// Range of mu4c - mu2c^2 over symmetric vectors with the given mu2c:
// [0, h^2 mu2c - mu2c^2], h = min(mean, 1 - mean).
Interval fourth_moment_bound(double mu2c, double mean);

enum class FamilyKind { TwoPoint, ThreePoint };

struct FamilyOptimum {
  FamilyKind kind = FamilyKind::TwoPoint;
  double d = 0.0;          // sqrt(mu2c) of the optimal member
  double fraction = 0.0;   // mass at each extreme (three-point)
  double family_value = 0.0;     // objective of the continuous member
  std::vector<double> pi_star;   // M-cluster discretization
  double objective_value = 0.0;  // variance_from_moments at pi_star
};

// Minimizer over symmetric two-point and three-point saturation laws.
FamilyOptimum symmetric_family_optimum(const VarianceCoefficients& v, int M, double mean);
// Objective of the two-point member (mean +- d) and of the three-point member
// with mass `fraction` at each of mean +- h.
double two_point_value(const VarianceCoefficients& v, double d);
double three_point_value(const VarianceCoefficients& v, double mean, double fraction);

std::vector<double> default_lambda_grid();

struct BetaSearch {
  double lambda_star = 0.0;  // inf for the stratified limit
  double objective = 0.0;
  std::vector<double> grid;
  std::vector<double> values;
};

BetaSearch beta_shape_search(const VarianceCoefficients& v, int M, const std::vector<double>& grid = {});

struct QpOptions {
  int random_starts = 8;
  int vertex_cap = -1;  // -1 -> M
  int max_iter = 20000;
  double tol = 1e-11;
  std::uint64_t seed = 1;
};

struct QpResult {
  Eigen::VectorXd pi;
  double objective = 0.0;
  double stratified_objective = 0.0;
  double best_vertex_objective = std::numeric_limits<double>::infinity();
  int starts = 0;
  bool converged = false;
  bool dominates_stratified = false;
  bool dominates_vertex = false;  // best cluster-based vertex among the starts
  bool dominated_baselines = false;
};

// Minimizes over {0 <= pi <= 1, sum pi = M * mean} from several starts: the
// stratified point, cluster-based vertices and random feasible points.
QpResult deterministic_qp(const QuadraticForm& q, double mean, const QpOptions& opt = {});
QpResult minimize_design(const SmoothObjective& f, int M, double mean, const QpOptions& opt = {});

// Euclidean projection onto {0 <= x <= 1, sum x = total}.
Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& y, double total);

// Rounds pi to counts n_j with the sum fixed at round(sum pi_j N_j), then
// minimizes f over counts: exhaustively when at most 200000 count vectors
// exist, otherwise by moving blocks of units between pairs of clusters while f
// decreases. Returns n_j / N_j.
std::vector<double> snap_to_counts(const SmoothObjective& f, const Eigen::VectorXd& pi, const std::vector<int>& sizes);

}  // namespace satdesign
