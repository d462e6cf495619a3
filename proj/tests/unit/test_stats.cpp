#include <catch_amalgamated.hpp>

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <vector>

#include "satdesign/errors.hpp"
#include "satdesign/rng.hpp"
#include "satdesign/stats.hpp"

using namespace satdesign;
using Catch::Approx;

TEST_CASE("sample covariance small cases", "[stats]") {
  const std::vector<double> a{1, 2, 3};
  CHECK(sample_cov(a, a) == Approx(1.0));
  CHECK(sample_var(a) == Approx(1.0));
  const std::vector<double> c{4, 4, 4};
  CHECK(sample_cov(c, a) == 0.0);
  CHECK(sample_cov(std::vector<double>{1, 2}, std::vector<double>{2, 1}) == Approx(-0.5));
  CHECK_THROWS_AS(sample_cov(std::vector<double>{1}, std::vector<double>{1}), InvalidInput);
  CHECK_THROWS_AS(sample_cov(std::vector<double>{1, 2}, std::vector<double>{1}), InvalidInput);
}

TEST_CASE("sample covariance is shift invariant and symmetric", "[stats][property]") {
  StreamRng rng(1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> x(7), y(7), xs(7);
    for (int i = 0; i < 7; ++i) {
      x[i] = rng.uniform() * 10 - 5;
      y[i] = rng.uniform() * 3;
      xs[i] = x[i] + 123.25;
    }
    CHECK(sample_cov(x, y) == Approx(sample_cov(y, x)).margin(1e-13));
    CHECK(sample_cov(xs, y) == Approx(sample_cov(x, y)).margin(1e-12));
    CHECK(sample_var(x) >= 0.0);
  }
}

TEST_CASE("design moments", "[stats]") {
  const auto m0 = design_moments(std::vector<double>(5, 0.3));
  CHECK(m0.mu2c == Approx(0.0).margin(1e-15));
  CHECK(m0.mu3c == Approx(0.0).margin(1e-15));
  CHECK(m0.mu4c == Approx(0.0).margin(1e-15));
  const auto m1 = design_moments(std::vector<double>{0, 0, 1, 1});
  CHECK(m1.mean == 0.5);
  CHECK(m1.mu2c == 0.25);
  CHECK(m1.mu3c == 0.0);
  CHECK(m1.mu4c == 0.0625);
  CHECK(design_moments(std::vector<double>{0.25, 0.5, 0.75}).mu2c == Approx(1.0 / 24.0));
  CHECK_THROWS_AS(design_moments(std::vector<double>{}), InvalidInput);
}

TEST_CASE("moment inequalities on random vectors", "[stats][property]") {
  StreamRng rng(2);
  for (int t = 0; t < 200; ++t) {
    const int M = 2 + static_cast<int>(rng.below(30));
    std::vector<double> pi(M);
    for (double& p : pi) p = rng.uniform();
    const auto m = design_moments(pi);
    CHECK(m.mu2c >= 0.0);
    CHECK(m.mu4c >= m.mu2c * m.mu2c - 1e-15);
    CHECK(m.mu2c <= m.mean * (1.0 - m.mean) + 1e-15);
  }
  // Equality exactly for {0,1} vectors.
  const auto v = design_moments(std::vector<double>{0, 1, 1, 0, 1});
  CHECK(v.mu2c == Approx(v.mean * (1 - v.mean)));
}

TEST_CASE("cross interaction", "[stats]") {
  Eigen::MatrixXd add(3, 4);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) add(i, j) = 1.5 * i - 0.7 * j * j;
  CHECK(cross_var(add) == Approx(0.0).margin(1e-13));
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  CHECK(cross_var(id) == Approx(1.0));
  StreamRng rng(3);
  Eigen::MatrixXd x(3, 4);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) x(i, j) = rng.uniform();
  // Elementwise double centring.
  double ss = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) {
      double r = x(i, j) - x.row(i).mean() - x.col(j).mean() + x.mean();
      ss += r * r;
    }
  CHECK(cross_var(x) == Approx(ss / 6.0));
  CHECK_THROWS_AS(cross_var(Eigen::MatrixXd::Zero(1, 3)), InvalidInput);
}

TEST_CASE("harmonic mean", "[stats]") {
  CHECK(harmonic_mean(std::vector<double>{0.4, 0.4}) == Approx(0.4));
  CHECK(harmonic_mean(std::vector<double>{1.0 / 3.0, 1.0}) == Approx(0.5));
  CHECK_THROWS_AS(harmonic_mean(std::vector<double>{0.5, 0.0}), DomainError);
  // A mean-preserving spread lowers it.
  CHECK(harmonic_mean(std::vector<double>{0.3, 0.7}) < harmonic_mean(std::vector<double>{0.5, 0.5}));
}

TEST_CASE("incomplete beta against boost", "[stats][oracle]") {
  StreamRng rng(4);
  for (int t = 0; t < 300; ++t) {
    const double a = 0.02 + 6.0 * rng.uniform();
    const double b = rng.uniform() < 0.5 ? a : 0.02 + 6.0 * rng.uniform();
    const double x = rng.uniform();
    CHECK(regularized_incomplete_beta(a, b, x) == Approx(boost::math::ibeta(a, b, x)).margin(1e-12));
  }
  CHECK(regularized_incomplete_beta(2, 3, 0.0) == 0.0);
  CHECK(regularized_incomplete_beta(2, 3, 1.0) == 1.0);
}

TEST_CASE("beta quantile against boost", "[stats][oracle]") {
  StreamRng rng(5);
  for (int t = 0; t < 200; ++t) {
    const double a = 0.02 + 3.0 * rng.uniform();
    const double p = 0.001 + 0.998 * rng.uniform();
    const double q = beta_quantile(a, a, p);
    CHECK(q == Approx(boost::math::ibeta_inv(a, a, p)).margin(1e-9));
    CHECK(regularized_incomplete_beta(a, a, q) == Approx(p).margin(1e-9));
  }
  CHECK(beta_quantile(1, 1, 0.25) == Approx(0.25).margin(1e-12));
}
