#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace satdesign {

// Unbiased sample variance (denominator n - 1).
double sample_var(std::span<const double> x);
// Unbiased sample covariance.
double sample_cov(std::span<const double> x, std::span<const double> y);
// Double-centred sum of squares divided by (m - 1)(n - 1).
double cross_var(const Eigen::MatrixXd& d);
double harmonic_mean(std::span<const double> x);

struct DesignMoments {
  double mean = 0.0;
  double mu2c = 0.0;
  double mu3c = 0.0;
  double mu4c = 0.0;
};

// Population (divide-by-M) central moments of a saturation vector.
DesignMoments design_moments(std::span<const double> pi);

// Regularized incomplete beta I_x(a, b).
double regularized_incomplete_beta(double a, double b, double x);
// Inverse of I_x(a, b) in x by bisection, absolute tolerance 1e-12.
double beta_quantile(double a, double b, double p);

}  // namespace satdesign
