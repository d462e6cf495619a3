#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "satdesign/designs.hpp"
#include "satdesign/estimators.hpp"
#include "satdesign/graph.hpp"
#include "satdesign/optimize.hpp"
#include "satdesign/outcomes.hpp"

namespace satdesign {

struct EnumerationResult {
  double mean = 0.0;
  double variance = 0.0;
  double mse = 0.0;
  double tte = 0.0;
  std::uint64_t assignments = 0;
  std::uint64_t saturation_vectors = 0;
  std::uint64_t excluded = 0;  // degenerate independent draws
};

// Number of assignments enumerate_exact would visit.
std::uint64_t enumeration_size(const Design& d, const Clustering& c);

// Exact law of the estimator by enumerating every within-cluster assignment
// for every saturation vector the design can produce.
EnumerationResult enumerate_exact(const Design& d, const Clustering& c, const Graph& g, const LinearModel& m,
                                  const EstimatorSpec& est = {}, std::uint64_t limit = 10'000'000);

struct McSummary {
  double mean = 0.0;
  double variance = 0.0;  // divide-by-R
  double bias = 0.0;
  double mse = 0.0;
  double se_mean = 0.0;
  double se_variance = 0.0;
  double se_mse = 0.0;
  double tte = 0.0;
  int replications = 0;  // non-degenerate draws used in the moments
  int degenerate = 0;
  std::uint64_t seed = 0;
};

McSummary summarize(std::span<const double> draws, double tte);

McSummary replicate(const Design& d, const Clustering& c, const Graph& g, const LinearModel& m,
                    const EstimatorSpec& est, int replications, std::uint64_t seed, int threads = 1,
                    std::vector<double>* draws = nullptr);

struct VarShapeConfig {
  int N = 2000;
  int M = 40;
  double decay = 0.5;          // A_jl = exp(-decay |j - l|)
  double target_ratio = 1.0 / 12.0;  // -V1 / (2 V2) after calibration
  int realizations = 25;
  int replications = 500;
  std::vector<double> lambdas;  // empty -> default_lambda_grid()
  std::uint64_t seed = 20240601;
  int threads = 1;
};

struct VarShapePoint {
  double lambda = 0.0;
  double mu2c = 0.0;
  double rel_mean = 0.0;  // percent of the lambda = inf variance
  double rel_se = 0.0;
  double rel_q025 = 0.0;
  double rel_q975 = 0.0;
  double predicted_rel_mean = 0.0;
};

struct VarShapeResult {
  std::vector<VarShapePoint> points;
  std::vector<std::vector<double>> relative;  // [realization][lambda]
  std::vector<std::vector<double>> variance;  // [realization][lambda]
  std::vector<double> sigma_alpha;
  std::vector<double> reference_variance;
};

VarShapeResult reproduce_var_shape(const VarShapeConfig& cfg);

struct DeterministicConfig {
  int M = 40;
  int cluster_size = 50;
  double p_in = 0.5;
  double alpha_lo = 0.0;
  double alpha_hi = 3.0;
  double alpha_noise_sd = 0.1;
  double gamma_lo = 0.0;
  double gamma_hi = 1.0;
  int realizations = 30;
  int replications = 1000;
  std::uint64_t seed = 20240602;
  int threads = 1;
  QpOptions qp;
};

struct DesignRun {
  int realization = 0;
  std::string design;  // deterministic | randomized | rerandomized
  McSummary mc;
  double mu2c = 0.0;
  double predicted_mse = 0.0;  // exact conditional MSE; deterministic design only, else NaN
};

struct DeterministicResult {
  std::vector<DesignRun> runs;
  std::vector<std::vector<double>> pi_hat;  // per realization
};

DeterministicResult reproduce_deterministic_comparison(const DeterministicConfig& cfg);

}  // namespace satdesign
