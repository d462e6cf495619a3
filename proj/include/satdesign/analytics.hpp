#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "satdesign/graph.hpp"
#include "satdesign/objective.hpp"
#include "satdesign/outcomes.hpp"

namespace satdesign {

enum class Regime { Stratified, ClusterBased, Indifferent };
const char* regime_name(Regime r);

struct MseParts {
  double expectation = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  double mse = 0.0;
};

// ---- no interference ------------------------------------------------------

// W_i = (n_t / N) Y_i(0) + (n_c / N) Y_i(1)
std::vector<double> sutva_w(const PotentialOutcomes& po, int n_t);

// All conditional forms take an integer-consistent pi and use n_t = sum n_j.
double sutva_cond_expectation(const PotentialOutcomes& po, const Clustering& c, std::span<const double> pi);
double sutva_cond_variance(const PotentialOutcomes& po, const Clustering& c, std::span<const double> pi);
MseParts sutva_cond_mse(const PotentialOutcomes& po, const Clustering& c, std::span<const double> pi);

// value = base + slope * mu2c; exact for permutation designs with equal
// cluster sizes and integer-consistent pi.
struct MarginalVariance {
  double base = 0.0;
  double slope = 0.0;
  double value = 0.0;
};
MarginalVariance sutva_marginal_variance(const PotentialOutcomes& po, const Clustering& c, int n_t, double mu2c);
Regime sutva_regime(const PotentialOutcomes& po, const Clustering& c, int n_t);

// Conditional MSE as scale * (pi'(W~W~' - diag S+) pi + S+' pi), with
// W~_j = W^{(j)} - N_j mean(W) and S+_j = N_j var(W^{(j)}).
QuadraticForm sutva_mse_form(const PotentialOutcomes& po, const Clustering& c, int n_t);

// ---- linear interference ---------------------------------------------------

double cond_expectation_interference(const LinearModel& m, const ExposureTensors& t, const Clustering& c,
                                     std::span<const double> pi);
double cond_variance_interference(const LinearModel& m, const ExposureTensors& t, const Clustering& c,
                                  std::span<const double> pi);
MseParts cond_mse_interference(const LinearModel& m, const ExposureTensors& t, const Clustering& c,
                               std::span<const double> pi);
// Same quantities with n_j = pi_j N_j treated as real numbers; the polynomial
// extension used by the optimizer.
MseParts relaxed_cond_mse_interference(const LinearModel& m, const ExposureTensors& t, const Clustering& c,
                                       std::span<const double> pi);

// Average of the conditional expectation over uniformly permuted pi with the
// given (mean, mu2c). Closed form; equal cluster sizes only.
double marginal_expectation_exact(const LinearModel& m, const ExposureTensors& t, const Clustering& c, int n_t,
                                  double mu2c);
// beta_bar + N^2/(n_t n_c) (gamma' - (gamma_bar - gamma')/(M - 1)) mu2c
double marginal_expectation_approx(const LinearModel& m, const Graph& g, const Clustering& c, int n_t, double mu2c);

struct InterferenceRegime {
  Regime regime = Regime::Stratified;
  double bias = 0.0;
};
// Cluster-based when gamma' > gamma_bar / M, stratified when below,
// indifferent at equality (1e-12 relative). Bias is the minimized bias.
InterferenceRegime interference_regime(double gamma_bar, double gamma_prime, int M);

struct PermutationAverage {
  double expectation = 0.0;
  double variance = 0.0;  // marginal variance of the estimator
  double se_expectation = 0.0;
  double se_variance = 0.0;
  std::uint64_t permutations = 0;
  bool exact = false;
};
// Exact over all distinct permutations when M <= 8, else `samples` uniform
// permutations. pi must be integer consistent.
PermutationAverage permutation_average(const LinearModel& m, const ExposureTensors& t, const Clustering& c,
                                       std::span<const double> pi, int samples, std::uint64_t seed, int threads = 1);

struct VarianceCoefficients {
  double V0 = 0.0;
  double V1 = 0.0;
  double V2 = 0.0;
  double V3 = 0.0;
  double V4 = 0.0;
};

VarianceCoefficients variance_coefficients_full(const LinearModel& m, const ExposureTensors& t, const Clustering& c,
                                                int n_t);
// Block-fixed gamma only.
VarianceCoefficients variance_coefficients_simplified(const LinearModel& m, const GraphStats& s, const Clustering& c,
                                                      int n_t);

// Conditional MSE under perfect clustering as a polynomial in pi with
// n_j = pi_j N_j real; equals the exact MSE at integer-consistent pi.
// Smooth with an analytic gradient; used as the design objective.
SmoothObjective perfect_clustering_objective(const LinearModel& m, const ExposureTensors& t, const Graph& g,
                                             const Clustering& c, int n_t);
// Exact relaxed conditional MSE with a central-difference gradient.
SmoothObjective relaxed_mse_objective(const LinearModel& m, const ExposureTensors& t, const Clustering& c);

// ---- stratified estimator ----------------------------------------------------

double stratified_expectation_sutva(const PotentialOutcomes& po, const Clustering& c,
                                    std::span<const double> weights = {});
double stratified_cond_variance_sutva(const PotentialOutcomes& po, const Clustering& c, std::span<const double> pi,
                                      std::span<const double> weights = {});
// Average over permutations of pi; equal cluster sizes.
double stratified_variance_sutva(const PotentialOutcomes& po, const Clustering& c, std::span<const double> pi,
                                 std::span<const double> weights = {});
double stratified_expectation_interference(const LinearModel& m, const Graph& g, const Clustering& c,
                                           std::span<const double> weights = {});

}  // namespace satdesign
