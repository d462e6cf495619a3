#include "satdesign/stats.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

#include "satdesign/errors.hpp"

namespace satdesign {

double sample_var(std::span<const double> x) {
  return sample_cov(x, x);
}

double sample_cov(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvalidInput("sample_cov: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw InvalidInput("sample_cov needs at least two values");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += (x[i] - mx) * (y[i] - my);
  return s / static_cast<double>(n - 1);
}

double cross_var(const Eigen::MatrixXd& d) {
  const auto m = d.rows();
  const auto n = d.cols();
  if (m < 2 || n < 2) throw InvalidInput("cross_var needs at least two rows and two columns");
  const Eigen::VectorXd rm = d.rowwise().mean();
  const Eigen::RowVectorXd cm = d.colwise().mean();
  const double all = d.mean();
  double ss = 0.0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i) {
      const double r = d(i, j) - rm(i) - cm(j) + all;
      ss += r * r;
    }
  return ss / (static_cast<double>(m - 1) * static_cast<double>(n - 1));
}

double harmonic_mean(std::span<const double> x) {
  if (x.empty()) throw InvalidInput("harmonic_mean of empty input");
  double s = 0.0;
  for (double v : x) {
    if (!(v > 0.0)) throw DomainError("harmonic_mean needs positive values");
    s += 1.0 / v;
  }
  return static_cast<double>(x.size()) / s;
}

DesignMoments design_moments(std::span<const double> pi) {
  if (pi.empty()) throw InvalidInput("design_moments of empty saturation vector");
  const double M = static_cast<double>(pi.size());
  DesignMoments m;
  for (double p : pi) m.mean += p;
  m.mean /= M;
  for (double p : pi) {
    const double d = p - m.mean;
    const double d2 = d * d;
    m.mu2c += d2;
    m.mu3c += d2 * d;
    m.mu4c += d2 * d2;
  }
  m.mu2c /= M;
  m.mu3c /= M;
  m.mu4c /= M;
  return m;
}

namespace {

// Continued fraction for I_x(a, b), modified Lentz.
double beta_cf(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) return h;
  }
  throw DomainError("incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw DomainError("incomplete beta needs a, b > 0");
  if (x < 0.0 || x > 1.0 || std::isnan(x)) throw DomainError("incomplete beta needs x in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double lfront =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(lfront) * beta_cf(a, b, x) / a;
  return 1.0 - std::exp(lfront) * beta_cf(b, a, 1.0 - x) / b;
}

double beta_quantile(double a, double b, double p) {
  if (p < 0.0 || p > 1.0 || std::isnan(p)) throw DomainError("beta_quantile needs p in [0, 1]");
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;
  // Bisect on the bit patterns of non-negative doubles, which are ordered like
  // the values. Converges to adjacent doubles in at most 64 steps, so the
  // steep tails of small-shape laws get full relative precision too.
  std::uint64_t lo = std::bit_cast<std::uint64_t>(0.0), hi = std::bit_cast<std::uint64_t>(1.0);
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (regularized_incomplete_beta(a, b, std::bit_cast<double>(mid)) < p)
      lo = mid;
    else
      hi = mid;
  }
  const double xl = std::bit_cast<double>(lo), xh = std::bit_cast<double>(hi);
  return std::fabs(regularized_incomplete_beta(a, b, xl) - p) < std::fabs(regularized_incomplete_beta(a, b, xh) - p)
             ? xl
             : xh;
}

}  // namespace satdesign
