#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "satdesign/analytics.hpp"
#include "satdesign/designs.hpp"
#include "satdesign/errors.hpp"
#include "satdesign/optimize.hpp"

using namespace satdesign;
using Catch::Approx;

namespace {

VarianceCoefficients random_coefficients(StreamRng& rng, bool v4_negative) {
  VarianceCoefficients v;
  v.V0 = rng.uniform();
  v.V1 = 2.0 * rng.uniform() - 1.0;
  v.V2 = 4.0 * rng.uniform();
  v.V3 = 0.0;
  v.V4 = v4_negative ? -3.0 * rng.uniform() : 3.0 * rng.uniform();
  return v;
}

// Global minimum of x'Qx + c'x over {0 <= x <= 1, sum x = s} by visiting
// every face: coordinates fixed at 0 or 1 or free, stationary point of the
// free block when its reduced Hessian is positive definite.
double face_oracle(const QuadraticForm& q, double s) {
  const int M = static_cast<int>(q.c.size());
  const Eigen::MatrixXd H = q.Q + q.Q.transpose();
  double best = std::numeric_limits<double>::infinity();
  int faces = 1;
  for (int j = 0; j < M; ++j) faces *= 3;
  for (int code = 0; code < faces; ++code) {
    std::vector<int> state(M), freev;
    int x = code;
    Eigen::VectorXd pt = Eigen::VectorXd::Zero(M);
    double fixed_sum = 0.0;
    for (int j = 0; j < M; ++j) {
      state[j] = x % 3;
      x /= 3;
      if (state[j] == 1) pt[j] = 1.0, fixed_sum += 1.0;
      if (state[j] == 2) freev.push_back(j);
    }
    const int k = static_cast<int>(freev.size());
    if (k == 0) {
      if (std::abs(fixed_sum - s) < 1e-12) best = std::min(best, q.value(pt));
      continue;
    }
    // KKT system on the free block: H_ff x_f + H_fb x_b + c_f = mu 1, 1'x_f = s - fixed.
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(k + 1, k + 1);
    Eigen::VectorXd r(k + 1);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) K(a, b) = q.scale * H(freev[a], freev[b]);
      K(a, k) = -1.0;
      K(k, a) = 1.0;
      double rhs = -q.scale * q.c[freev[a]];
      for (int j = 0; j < M; ++j)
        if (state[j] == 1) rhs -= q.scale * H(freev[a], j);
      r[a] = rhs;
    }
    r[k] = s - fixed_sum;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(r);
    bool ok = true;
    for (int a = 0; a < k; ++a) {
      if (sol[a] < -1e-12 || sol[a] > 1.0 + 1e-12) ok = false;
      pt[freev[a]] = sol[a];
    }
    if (ok) best = std::min(best, q.value(pt));
  }
  return best;
}

bool concave_on_slice(const QuadraticForm& q) {
  const int M = static_cast<int>(q.c.size());
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(M, M) - Eigen::MatrixXd::Constant(M, M, 1.0 / M);
  Eigen::MatrixXd H = P * (q.Q + q.Q.transpose()) * P;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  // One zero eigenvalue along the all-ones direction.
  return es.eigenvalues().maxCoeff() < 1e-9 && (es.eigenvalues().array() < -1e-9).count() == M - 1;
}

}  // namespace

TEST_CASE("moment bounds", "[optimize]") {
  CHECK(variance_bound_pi(0.5).hi == 0.25);
  CHECK(variance_bound_pi(0.2).hi == Approx(0.16));
  const auto f = fourth_moment_bound(0.1, 0.5);
  CHECK(f.lo == 0.0);
  CHECK(f.hi == Approx(0.25 * 0.1 - 0.01));
  CHECK_THROWS_AS(fourth_moment_bound(0.3, 0.5), DomainError);
}

TEST_CASE("closed-form family optimum beats a dense grid", "[optimize][oracle]") {
  StreamRng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const auto v = random_coefficients(rng, trial % 2 == 1);
    const double mean = trial % 4 < 2 ? 0.5 : 0.3;
    const auto opt = symmetric_family_optimum(v, 40, mean);
    const double h = std::min(mean, 1.0 - mean);
    for (int k = 0; k < 200; ++k) {
      const double t = k / 199.0;
      CHECK(opt.family_value <= two_point_value(v, t * h) + 1e-9);
      CHECK(opt.family_value <= three_point_value(v, mean, 0.5 * t) + 1e-9);
    }
  }
}

TEST_CASE("perfect clustering regimes", "[optimize]") {
  VarianceCoefficients v;
  v.V0 = 1.0;
  v.V1 = 0.4;
  auto opt = symmetric_family_optimum(v, 10, 0.5);
  CHECK(opt.pi_star == std::vector<double>(10, 0.5));
  v.V1 = -0.4;
  opt = symmetric_family_optimum(v, 10, 0.3);
  CHECK(std::count(opt.pi_star.begin(), opt.pi_star.end(), 0.0) == 5);
  CHECK(std::count_if(opt.pi_star.begin(), opt.pi_star.end(), [](double p) { return std::abs(p - 0.6) < 1e-12; }) == 5);
}

TEST_CASE("interior two-point optimum", "[optimize]") {
  VarianceCoefficients v;
  v.V0 = 1.0;
  v.V1 = -0.02;
  v.V2 = 1.0;
  const auto opt = symmetric_family_optimum(v, 40, 0.5);
  CHECK(opt.kind == FamilyKind::TwoPoint);
  CHECK(opt.d == Approx(std::sqrt(0.01)));
}

TEST_CASE("negative V4 uses the three-point family", "[optimize]") {
  VarianceCoefficients v;
  v.V0 = 1.0;
  v.V1 = -0.05;
  v.V2 = 0.5;
  v.V4 = -1.0;
  const auto opt = symmetric_family_optimum(v, 40, 0.5);
  CHECK(opt.kind == FamilyKind::ThreePoint);
  CHECK(opt.fraction > 0.0);
  CHECK(opt.fraction <= 0.5);
}

TEST_CASE("Beta shape search limits", "[optimize]") {
  VarianceCoefficients v;
  v.V0 = 1.0;
  v.V1 = 0.3;
  CHECK(std::isinf(beta_shape_search(v, 40).lambda_star));
  v.V1 = -1.0;
  v.V2 = 0.1;  // vertex at mu2c = 5, beyond the attainable range
  CHECK(beta_shape_search(v, 40).lambda_star == 0.0);
  // Interior vertex at mu2c = 1/12 picks out the uniform law.
  v.V1 = -1.0 / 6.0;
  v.V2 = 1.0;
  const auto s = beta_shape_search(v, 400);
  CHECK(s.lambda_star == Approx(1.0).margin(0.1));
}

TEST_CASE("capped simplex projection", "[optimize][property]") {
  StreamRng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd y(7);
    for (int j = 0; j < 7; ++j) y[j] = 4.0 * rng.uniform() - 2.0;
    const double s = 7.0 * rng.uniform();
    const auto x = project_capped_simplex(y, s);
    CHECK(x.sum() == Approx(s).margin(1e-10));
    CHECK(x.minCoeff() >= -1e-14);
    CHECK(x.maxCoeff() <= 1.0 + 1e-14);
    // Projection property: (y - x)'(z - x) <= 0 for feasible z.
    const auto z = project_capped_simplex(Eigen::VectorXd::Constant(7, s / 7.0), s);
    CHECK((y - x).dot(z - x) <= 1e-10);
  }
}

TEST_CASE("QP matches the face-enumeration oracle", "[optimize][oracle]") {
  StreamRng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    QuadraticForm q;
    Eigen::MatrixXd A(4, 4);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) A(a, b) = 2.0 * rng.uniform() - 1.0;
    q.Q = 0.5 * (A + A.transpose());
    q.c = Eigen::VectorXd(4);
    for (int j = 0; j < 4; ++j) q.c[j] = 2.0 * rng.uniform() - 1.0;
    const auto res = deterministic_qp(q, 0.5);
    CHECK(res.pi.sum() == Approx(2.0).margin(1e-9));
    CHECK(res.objective == Approx(face_oracle(q, 2.0)).margin(1e-6));
    CHECK(res.objective <= res.stratified_objective + 1e-12);
  }
}

TEST_CASE("concave SUTVA MSE lands on a vertex", "[optimize]") {
  int concave = 0;
  for (std::uint64_t seed = 1; seed < 200 && concave < 5; ++seed) {
    auto inst = testing::random_instance({4, 4, 4, 4}, 0.0, seed, false);
    for (int i = 0; i < 16; ++i) inst.m.alpha[i] -= 0.5 * inst.c.cluster_of(i);
    const auto po = sutva_outcomes(inst.m);
    const auto q = sutva_mse_form(po, inst.c, 8);
    if (!concave_on_slice(q)) continue;
    ++concave;
    const auto res = deterministic_qp(q, 0.5);
    for (int j = 0; j < 4; ++j) CHECK(std::min(res.pi[j], 1.0 - res.pi[j]) < 1e-9);
    // Exhaustive over integer-consistent vectors.
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a <= 4; ++a)
      for (int b = 0; b <= 4; ++b)
        for (int c = 0; c <= 4; ++c) {
          const int d = 8 - a - b - c;
          if (d < 0 || d > 4) continue;
          const std::vector<double> pi{a / 4.0, b / 4.0, c / 4.0, d / 4.0};
          best = std::min(best, sutva_cond_mse(po, inst.c, pi).mse);
        }
    CHECK(res.objective == Approx(best).margin(1e-6));
  }
  CHECK(concave >= 1);
}

TEST_CASE("snap_to_counts gives integer-consistent output", "[optimize]") {
  const auto inst = testing::random_instance({6, 6, 6, 6}, 0.3, 4);
  const auto t = exposure_tensors(inst.m, inst.g, inst.c);
  const auto f = relaxed_mse_objective(inst.m, t, inst.c);
  Eigen::VectorXd pi(4);
  pi << 0.31, 0.42, 0.55, 0.72;
  const auto snapped = snap_to_counts(f, pi, inst.c.sizes());
  CHECK(integer_consistent(snapped, inst.c));
  const auto counts = treated_counts(snapped, inst.c);
  CHECK(std::accumulate(counts.begin(), counts.end(), 0) == 12);
}

TEST_CASE("snap_to_counts finds the best count vector on small instances", "[optimize][oracle]") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto inst = testing::random_instance({3, 4, 5, 6}, 0.4, seed);
    const auto t = exposure_tensors(inst.m, inst.g, inst.c);
    const auto f = relaxed_mse_objective(inst.m, t, inst.c);
    Eigen::VectorXd pi(4);
    pi << 0.2, 0.5, 0.6, 0.5;  // 0.6 + 2 + 3 + 3 = 8.6 -> 9 treated
    const auto snapped = snap_to_counts(f, pi, inst.c.sizes());
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a <= 3; ++a)
      for (int b = 0; b <= 4; ++b)
        for (int c = 0; c <= 5; ++c) {
          const int d = 9 - a - b - c;
          if (d < 0 || d > 6) continue;
          Eigen::VectorXd x(4);
          x << a / 3.0, b / 4.0, c / 5.0, d / 6.0;
          best = std::min(best, f.value(x));
        }
    CHECK(f.value(Eigen::Map<const Eigen::VectorXd>(snapped.data(), 4)) == Approx(best).margin(1e-12));
  }
}
