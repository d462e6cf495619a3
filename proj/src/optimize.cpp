#include "satdesign/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "satdesign/designs.hpp"
#include "satdesign/errors.hpp"
#include "satdesign/rng.hpp"

namespace satdesign {

double variance_from_moments(const VarianceCoefficients& v, const DesignMoments& m) {
  return v.V0 + v.V1 * m.mu2c + v.V2 * m.mu2c * m.mu2c + v.V3 * m.mu3c + v.V4 * (m.mu4c - m.mu2c * m.mu2c);
}

Interval variance_bound_pi(double mean) {
  if (!(mean >= 0.0 && mean <= 1.0)) throw DomainError("variance_bound_pi: mean must lie in [0, 1]");
  return {0.0, mean * (1.0 - mean)};
}

Interval fourth_moment_bound(double mu2c, double mean) {
  if (!(mean >= 0.0 && mean <= 1.0)) throw DomainError("fourth_moment_bound: mean must lie in [0, 1]");
  const double h = std::min(mean, 1.0 - mean);
  if (!(mu2c >= 0.0 && mu2c <= h * h * (1.0 + 1e-12))) throw DomainError("fourth_moment_bound: mu2c outside [0, h^2]");
  // delta_j = (pi_j - mean)^2 lives in [0, h^2], so E[delta^2] <= h^2 E[delta].
  return {0.0, std::max(0.0, h * h * mu2c - mu2c * mu2c)};
}

double two_point_value(const VarianceCoefficients& v, double d) {
  const double x = d * d;
  return v.V0 + v.V1 * x + v.V2 * x * x;
}

double three_point_value(const VarianceCoefficients& v, double mean, double fraction) {
  const double h = std::min(mean, 1.0 - mean);
  const double mu2 = 2.0 * fraction * h * h;
  const double mu4 = 2.0 * fraction * h * h * h * h;
  return v.V0 + v.V1 * mu2 + v.V2 * mu2 * mu2 + v.V4 * (mu4 - mu2 * mu2);
}

FamilyOptimum symmetric_family_optimum(const VarianceCoefficients& v, int M, double mean) {
  if (M < 1) throw InvalidInput("symmetric_family_optimum: M must be positive");
  if (!(mean >= 0.0 && mean <= 1.0)) throw DomainError("symmetric_family_optimum: mean must lie in [0, 1]");
  // Above one half the family is mirrored, so the reachable spread is h.
  const double h = std::min(mean, 1.0 - mean);
  const double h2 = h * h;
  FamilyOptimum out;
  out.kind = v.V4 >= 0.0 ? FamilyKind::TwoPoint : FamilyKind::ThreePoint;
  // Objective in y = mu2c: V0 + a y + b y^2 on [0, h^2].
  const double a = out.kind == FamilyKind::TwoPoint ? v.V1 : v.V1 + h2 * v.V4;
  const double b = out.kind == FamilyKind::TwoPoint ? v.V2 : v.V2 - v.V4;
  auto value = [&](double y) { return v.V0 + a * y + b * y * y; };

  std::vector<double> candidates{0.0};
  if (b > 0.0) {
    const double ys = -a / (2.0 * b);
    if (ys > 0.0 && ys < h2) candidates.push_back(ys);
  }
  if (h2 > 0.0) candidates.push_back(h2);
  double best_y = 0.0;
  double best = value(0.0);
  for (double y : candidates) {
    const double fy = value(y);
    if (fy < best - 1e-15 * std::max(1.0, std::fabs(best))) {
      best = fy;
      best_y = y;
    }
  }
  out.d = std::sqrt(best_y);
  out.family_value = best;
  if (out.kind == FamilyKind::TwoPoint) {
    out.pi_star = two_point_pi(M, mean, std::min(out.d, h));
  } else {
    out.fraction = h2 > 0.0 ? best_y / (2.0 * h2) : 0.0;
    out.pi_star = three_point_pi(M, mean, out.fraction);
  }
  out.objective_value = variance_from_moments(v, design_moments(out.pi_star));
  return out;
}

std::vector<double> default_lambda_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 20; ++k) g.push_back(0.02 * k);
  for (double x : {0.6, 0.8, 1.0, 1.5, 2.0, 5.0}) g.push_back(x);
  g.push_back(std::numeric_limits<double>::infinity());
  return g;
}

BetaSearch beta_shape_search(const VarianceCoefficients& v, int M, const std::vector<double>& grid_in) {
  BetaSearch out;
  out.grid = grid_in.empty() ? default_lambda_grid() : grid_in;
  if (!std::is_sorted(out.grid.begin(), out.grid.end())) throw InvalidInput("lambda grid must be increasing");
  auto f = [&](double lambda) { return variance_from_moments(v, design_moments(beta_quantile_pi(lambda, M))); };
  std::size_t best = 0;
  for (std::size_t i = 0; i < out.grid.size(); ++i) {
    out.values.push_back(f(out.grid[i]));
    if (out.values[i] < out.values[best]) best = i;
  }
  out.lambda_star = out.grid[best];
  out.objective = out.values[best];
  if (best == 0 || best + 1 >= out.grid.size() || std::isinf(out.grid[best])) return out;
  double lo = out.grid[best - 1];
  double hi = std::isinf(out.grid[best + 1]) ? 2.0 * out.grid[best] : out.grid[best + 1];
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > 1e-4) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = f(x2);
    }
  }
  const double xm = 0.5 * (lo + hi);
  const double fm = f(xm);
  if (fm < out.objective) {
    out.lambda_star = xm;
    out.objective = fm;
  }
  return out;
}

Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& y, double total) {
  const Eigen::Index n = y.size();
  if (total < -1e-12 || total > n + 1e-12) throw DomainError("projection: sum constraint outside [0, M]");
  auto mass = [&](double theta) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += std::clamp(y(i) - theta, 0.0, 1.0);
    return s;
  };
  std::vector<double> bp;
  bp.reserve(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    bp.push_back(y(i));
    bp.push_back(y(i) - 1.0);
  }
  std::sort(bp.begin(), bp.end());
  // mass() is non-increasing and piecewise linear between breakpoints.
  double theta = bp.front();
  if (mass(bp.front()) <= total) {
    theta = bp.front();
  } else if (mass(bp.back()) >= total) {
    theta = bp.back();
  } else {
    std::size_t lo = 0, hi = bp.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (mass(bp[mid]) >= total)
        lo = mid;
      else
        hi = mid;
    }
    const double m_lo = mass(bp[lo]);
    const double m_hi = mass(bp[hi]);
    theta = m_lo == m_hi ? bp[lo] : bp[lo] + (m_lo - total) / (m_lo - m_hi) * (bp[hi] - bp[lo]);
  }
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = std::clamp(y(i) - theta, 0.0, 1.0);
  return x;
}

namespace {

struct LocalResult {
  Eigen::VectorXd x;
  double f = 0.0;
  bool converged = false;
};

double stationarity(const Eigen::VectorXd& x, const Eigen::VectorXd& g, double total) {
  const double gmax = g.cwiseAbs().maxCoeff();
  if (gmax == 0.0) return 0.0;
  return (project_capped_simplex(x - g / gmax, total) - x).cwiseAbs().maxCoeff();
}

// Equality-constrained Newton step on the free coordinates of a quadratic.
bool refine_active_set(const QuadraticForm& q, const Eigen::MatrixXd& Qs, double total, Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  std::vector<Eigen::Index> free_idx;
  double fixed_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (x(i) > 1e-9 && x(i) < 1.0 - 1e-9)
      free_idx.push_back(i);
    else
      fixed_sum += x(i);
  }
  const Eigen::Index k = static_cast<Eigen::Index>(free_idx.size());
  if (k < 2) return false;
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
  Eigen::VectorXd rhs(k + 1);
  for (Eigen::Index a = 0; a < k; ++a) {
    double r = -q.c(free_idx[a]);
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool is_free = std::find(free_idx.begin(), free_idx.end(), i) != free_idx.end();
      if (!is_free) r -= 2.0 * Qs(free_idx[a], i) * x(i);
    }
    for (Eigen::Index b = 0; b < k; ++b) kkt(a, b) = 2.0 * Qs(free_idx[a], free_idx[b]);
    kkt(a, k) = 1.0;
    kkt(k, a) = 1.0;
    rhs(a) = r;
  }
  rhs(k) = total - fixed_sum;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) return false;
  const Eigen::VectorXd sol = lu.solve(rhs);
  Eigen::VectorXd cand = x;
  for (Eigen::Index a = 0; a < k; ++a) {
    if (sol(a) < -1e-12 || sol(a) > 1.0 + 1e-12) return false;
    cand(free_idx[a]) = std::clamp(sol(a), 0.0, 1.0);
  }
  if (q.value(cand) <= q.value(x)) {
    x = cand;
    return true;
  }
  return false;
}

LocalResult local_descent(const SmoothObjective& f, const QuadraticForm* quad, const Eigen::MatrixXd* Qs,
                          Eigen::VectorXd x, double total, const QpOptions& opt) {
  x = project_capped_simplex(x, total);
  double fx = f.value(x);
  Eigen::VectorXd g = f.gradient(x);
  double step = 1.0 / std::max(g.cwiseAbs().maxCoeff(), 1e-300);
  LocalResult r;
  for (int round = 0; round < 4; ++round) {
    for (int it = 0; it < opt.max_iter; ++it) {
      if (stationarity(x, g, total) <= opt.tol) {
        r.converged = true;
        break;
      }
      Eigen::VectorXd d = project_capped_simplex(x - step * g, total) - x;
      double slope = g.dot(d);
      if (!(slope < 0.0)) {
        // Step too long or too short to make progress; reset to a unit move.
        step = 1.0 / std::max(g.cwiseAbs().maxCoeff(), 1e-300);
        d = project_capped_simplex(x - step * g, total) - x;
        slope = g.dot(d);
        if (!(slope < 0.0)) {
          r.converged = true;
          break;
        }
      }
      double tau = 1.0;
      Eigen::VectorXd xn;
      double fn;
      if (quad) {
        const double curv = quad->scale * d.dot(*Qs * d);
        if (curv > 0.0) tau = std::min(1.0, -slope / (2.0 * curv));
        xn = x + tau * d;
        fn = f.value(xn);
      } else {
        xn = x + d;
        fn = f.value(xn);
        int halvings = 0;
        while (fn > fx + 1e-4 * tau * slope && halvings < 60) {
          tau *= 0.5;
          xn = x + tau * d;
          fn = f.value(xn);
          ++halvings;
        }
      }
      if (!(fn <= fx)) {
        r.converged = true;
        break;
      }
      const Eigen::VectorXd gn = f.gradient(xn);
      const Eigen::VectorXd s = xn - x;
      const double sy = s.dot(gn - g);
      step = sy > 0.0 ? s.squaredNorm() / sy : 2.0 * step;
      if (!std::isfinite(step) || step <= 0.0) step = 1.0 / std::max(gn.cwiseAbs().maxCoeff(), 1e-300);
      const bool tiny = s.cwiseAbs().maxCoeff() < 1e-15;
      x = xn;
      fx = fn;
      g = gn;
      if (tiny) {
        r.converged = stationarity(x, g, total) <= 1e-7;
        break;
      }
    }
    if (!quad || !refine_active_set(*quad, *Qs, total, x)) break;
    fx = f.value(x);
    g = f.gradient(x);
  }
  r.x = x;
  r.f = fx;
  return r;
}

std::uint64_t binomial_capped(int n, int k, std::uint64_t cap) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long double r = 1.0L;
  for (int i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > static_cast<long double>(cap)) return cap + 1;
  }
  return static_cast<std::uint64_t>(std::llround(r));
}

QpResult multistart(const SmoothObjective& f, const QuadraticForm* quad, int M, double mean, const QpOptions& opt) {
  if (M < 1) throw InvalidInput("optimizer: need at least one cluster");
  if (!(mean >= 0.0 && mean <= 1.0)) throw DomainError("optimizer: mean must lie in [0, 1]");
  const double total = M * mean;
  Eigen::MatrixXd Qs;
  if (quad) Qs = 0.5 * (quad->Q + quad->Q.transpose());

  std::vector<Eigen::VectorXd> vertices;
  const int k_full = static_cast<int>(std::floor(total + 1e-9));
  const double frac = std::max(0.0, total - k_full);
  const std::uint64_t cap = opt.vertex_cap < 0 ? static_cast<std::uint64_t>(M) : static_cast<std::uint64_t>(opt.vertex_cap);
  const int slots = frac > 1e-9 ? k_full + 1 : k_full;
  auto make_vertex = [&](const std::vector<int>& order) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(M);
    for (int s = 0; s < k_full; ++s) v(order[s]) = 1.0;
    if (frac > 1e-9) v(order[k_full]) = frac;
    return v;
  };
  if (slots <= M && cap > 0) {
    if (frac <= 1e-9 && binomial_capped(M, k_full, cap) <= cap) {
      std::vector<int> sel(M, 0);
      std::fill(sel.end() - k_full, sel.end(), 1);
      do {
        Eigen::VectorXd v(M);
        for (int j = 0; j < M; ++j) v(j) = sel[j];
        vertices.push_back(v);
      } while (std::next_permutation(sel.begin(), sel.end()));
    } else {
      // Greedy vertex from the gradient at the stratified point, then random ones.
      const Eigen::VectorXd g0 = f.gradient(Eigen::VectorXd::Constant(M, mean));
      std::vector<int> order(M);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return g0(a) < g0(b); });
      vertices.push_back(make_vertex(order));
      for (std::uint64_t v = 1; v < cap; ++v) {
        StreamRng rng(opt.seed, v, Stage::Optimizer, 0);
        for (int j = M - 1; j > 0; --j) std::swap(order[j], order[rng.below(static_cast<std::uint64_t>(j) + 1)]);
        vertices.push_back(make_vertex(order));
      }
    }
  }

  QpResult res;
  res.stratified_objective = f.value(Eigen::VectorXd::Constant(M, mean));
  std::vector<Eigen::VectorXd> starts{Eigen::VectorXd::Constant(M, mean)};
  for (const auto& v : vertices) {
    res.best_vertex_objective = std::min(res.best_vertex_objective, f.value(v));
    starts.push_back(v);
  }
  for (int r = 0; r < opt.random_starts; ++r) {
    StreamRng rng(opt.seed, static_cast<std::uint64_t>(r), Stage::Optimizer, 1);
    Eigen::VectorXd x(M);
    for (int j = 0; j < M; ++j) x(j) = rng.uniform();
    starts.push_back(x);
  }
  res.objective = std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    const LocalResult lr = local_descent(f, quad, quad ? &Qs : nullptr, s, total, opt);
    if (lr.f < res.objective) {
      res.objective = lr.f;
      res.pi = lr.x;
      res.converged = lr.converged;
    }
  }
  res.starts = static_cast<int>(starts.size());
  const double slack = 1e-12 * std::max(1.0, std::fabs(res.objective));
  res.dominates_stratified = res.objective <= res.stratified_objective + slack;
  res.dominates_vertex = res.objective <= res.best_vertex_objective + slack;
  res.dominated_baselines = res.dominates_stratified && res.dominates_vertex;
  return res;
}

}  // namespace

QpResult deterministic_qp(const QuadraticForm& q, double mean, const QpOptions& opt) {
  const Eigen::Index M = q.Q.rows();
  if (q.Q.cols() != M || q.c.size() != M) throw InvalidInput("quadratic form dimensions disagree");
  return multistart(as_smooth(q), &q, static_cast<int>(M), mean, opt);
}

QpResult minimize_design(const SmoothObjective& f, int M, double mean, const QpOptions& opt) {
  return multistart(f, nullptr, M, mean, opt);
}

namespace {

constexpr std::uint64_t kExhaustiveSnap = 200000;

// Number of count vectors 0 <= n_j <= N_j with sum n_j = total, capped at cap.
std::uint64_t count_vectors(const std::vector<int>& sizes, int total, std::uint64_t cap) {
  std::vector<std::uint64_t> ways(total + 1, 0);
  ways[0] = 1;
  for (int s : sizes) {
    std::vector<std::uint64_t> next(total + 1, 0);
    for (int t = 0; t <= total; ++t) {
      if (!ways[t]) continue;
      for (int k = 0; k <= s && t + k <= total; ++k) next[t + k] = std::min(cap, next[t + k] + ways[t]);
    }
    ways.swap(next);
  }
  return ways[total];
}

}  // namespace

std::vector<double> snap_to_counts(const SmoothObjective& f, const Eigen::VectorXd& pi, const std::vector<int>& sizes) {
  const int M = static_cast<int>(sizes.size());
  if (pi.size() != M) throw InvalidInput("snap_to_counts: length mismatch");
  double target = 0.0;
  for (int j = 0; j < M; ++j) target += pi(j) * sizes[j];
  const int total = static_cast<int>(std::llround(target));
  std::vector<int> n(M);
  std::vector<std::pair<double, int>> rem;
  int assigned = 0;
  for (int j = 0; j < M; ++j) {
    const double x = std::clamp(pi(j), 0.0, 1.0) * sizes[j];
    n[j] = static_cast<int>(std::floor(x + 1e-9));
    assigned += n[j];
    rem.emplace_back(x - n[j], j);
  }
  std::stable_sort(rem.begin(), rem.end(), [](auto a, auto b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total && r < rem.size(); ++r) {
    const int j = rem[r].second;
    if (n[j] < sizes[j]) {
      ++n[j];
      ++assigned;
    }
  }
  auto to_pi = [&](const std::vector<int>& cnt) {
    Eigen::VectorXd p(M);
    for (int j = 0; j < M; ++j) p(j) = static_cast<double>(cnt[j]) / sizes[j];
    return p;
  };
  // Small count spaces are searched exhaustively.
  if (count_vectors(sizes, total, kExhaustiveSnap + 1) <= kExhaustiveSnap) {
    std::vector<int> cnt(M, 0), best_n = n;
    double best = f.value(to_pi(n));
    std::vector<int> tail(M + 1, 0);  // max units placeable in clusters j..M-1
    for (int j = M - 1; j >= 0; --j) tail[j] = tail[j + 1] + sizes[j];
    std::function<void(int, int)> visit = [&](int j, int left) {
      if (j == M) {
        const double v = f.value(to_pi(cnt));
        if (v < best - 1e-15 * std::max(1.0, std::fabs(best))) {
          best = v;
          best_n = cnt;
        }
        return;
      }
      for (int k = std::max(0, left - tail[j + 1]); k <= std::min(sizes[j], left); ++k) {
        cnt[j] = k;
        visit(j + 1, left - k);
      }
    };
    visit(0, total);
    const Eigen::VectorXd p = to_pi(best_n);
    return {p.data(), p.data() + M};
  }

  // Steepest descent over transfers of k units from cluster j to cluster l,
  // any k; single-unit moves alone stall on non-convex objectives.
  double cur = f.value(to_pi(n));
  for (;;) {
    double best = cur;
    int bj = -1, bl = -1, bk = 0;
    for (int j = 0; j < M; ++j) {
      for (int l = 0; l < M; ++l) {
        if (l == j) continue;
        const int kmax = std::min(n[j], sizes[l] - n[l]);
        for (int k = 1; k <= kmax; ++k) {
          n[j] -= k;
          n[l] += k;
          const double v = f.value(to_pi(n));
          n[j] += k;
          n[l] -= k;
          if (v < best - 1e-15 * std::max(1.0, std::fabs(best))) {
            best = v;
            bj = j;
            bl = l;
            bk = k;
          }
        }
      }
    }
    if (bj < 0) break;
    n[bj] -= bk;
    n[bl] += bk;
    cur = best;
  }
  const Eigen::VectorXd p = to_pi(n);
  return {p.data(), p.data() + M};
}

}  // namespace satdesign
