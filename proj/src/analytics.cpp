#include "satdesign/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "satdesign/designs.hpp"
#include "satdesign/errors.hpp"
#include "satdesign/parallel.hpp"
#include "satdesign/rng.hpp"
#include "satdesign/stats.hpp"

namespace satdesign {

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Stratified:
      return "stratified";
    case Regime::ClusterBased:
      return "cluster_based";
    case Regime::Indifferent:
      return "indifferent";
  }
  return "unknown";
}

namespace {

void require_po(const PotentialOutcomes& po, const Clustering& c) {
  if (static_cast<int>(po.y0.size()) != c.num_units() || po.y1.size() != po.y0.size())
    throw InvalidInput("potential outcomes do not match the clustering");
}

int total_treated(const std::vector<int>& n) { return std::accumulate(n.begin(), n.end(), 0); }

void require_nondegenerate(double n_t, int N) {
  if (!(n_t > 0.0) || !(n_t < N)) throw DegenerateAssignment("design treats no unit or every unit");
}

// Sample variance of v restricted to a cluster; zero for singletons.
double cluster_var(const std::vector<double>& v, const std::vector<int>& members) {
  if (members.size() < 2) return 0.0;
  double mean = 0.0;
  for (int i : members) mean += v[i];
  mean /= static_cast<double>(members.size());
  double s = 0.0;
  for (int i : members) s += (v[i] - mean) * (v[i] - mean);
  return s / static_cast<double>(members.size() - 1);
}

double cluster_cov(const std::vector<double>& a, const std::vector<double>& b, const std::vector<int>& members) {
  if (members.size() < 2) return 0.0;
  double ma = 0.0, mb = 0.0;
  for (int i : members) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(members.size());
  mb /= static_cast<double>(members.size());
  double s = 0.0;
  for (int i : members) s += (a[i] - ma) * (b[i] - mb);
  return s / static_cast<double>(members.size() - 1);
}

std::vector<double> cluster_totals(const std::vector<double>& v, const Clustering& c) {
  std::vector<double> t(c.num_clusters(), 0.0);
  for (int i = 0; i < c.num_units(); ++i) t[c.cluster_of(i)] += v[i];
  return t;
}

double var_or_zero(std::span<const double> x) { return x.size() < 2 ? 0.0 : sample_var(x); }
double cov_or_zero(std::span<const double> x, std::span<const double> y) {
  return x.size() < 2 ? 0.0 : sample_cov(x, y);
}

// Falling-factorial inclusion moments of simple random sampling of m from n:
// f_r = (m)_r / (n)_r, extended polynomially to real m. Zero when r > n.
struct Inclusion {
  double f[5] = {1.0, 0.0, 0.0, 0.0, 0.0};
  double df[5] = {0.0, 0.0, 0.0, 0.0, 0.0};  // derivative in m
};

Inclusion inclusion(double m, int n) {
  Inclusion inc;
  double num = 1.0, dnum = 0.0, den = 1.0;
  for (int r = 1; r <= 4; ++r) {
    if (r > n) break;
    dnum = dnum * (m - (r - 1)) + num;
    num *= m - (r - 1);
    den *= n - (r - 1);
    inc.f[r] = num / den;
    inc.df[r] = dnum / den;
  }
  return inc;
}

// Per-cluster sufficient statistics of the within-cluster quadratic part.
struct WithinStats {
  double sbb = 0.0;  // sum (b - mean b)^2
  double sbd = 0.0;  // sum (b - mean b) d
  double sdd = 0.0;  // sum d^2
  double q2 = 0.0;   // sum_{i,k} D_ik^2
  double tt = 0.0;   // sum_{i,k} D_ik
};

// Var(sum b_i Z_i + sum_{i<k} D_ik Z_i Z_k) under simple random sampling,
// and its derivative in m.
double within_variance(const WithinStats& w, const Inclusion& inc, double* deriv = nullptr) {
  const double h = 0.5 * w.tt;
  auto combine = [&](const double* f) {
    return (f[1] - f[2]) * w.sbb + 2.0 * (f[2] - f[3]) * w.sbd + 0.5 * f[2] * w.q2 + f[3] * (w.sdd - w.q2) +
           f[4] * (h * h + 0.5 * w.q2 - w.sdd);
  };
  if (deriv) *deriv = combine(inc.df) - 2.0 * inc.f[2] * inc.df[2] * h * h;
  return combine(inc.f) - inc.f[2] * inc.f[2] * h * h;
}

struct Moments {
  double expectation = 0.0;
  double variance = 0.0;
};

// Conditional mean and variance of the difference in means under the linear
// interference model, for real-valued treated counts m_j = pi_j N_j.
Moments interference_moments(const LinearModel& mod, const ExposureTensors& t, const Clustering& c,
                             std::span<const double> pi) {
  const int N = c.num_units();
  const int M = c.num_clusters();
  if (t.N != N || t.M != M) throw InvalidInput("exposure tensors do not match the clustering");
  if (static_cast<int>(pi.size()) != M) throw InvalidInput("saturation vector length mismatch");
  double n_t = 0.0;
  for (int j = 0; j < M; ++j) n_t += pi[j] * c.size(j);
  require_nondegenerate(n_t, N);
  const double n_c = N - n_t;
  const double scale = N / (n_t * n_c);

  std::vector<double> U(N);
  double alpha_sum = 0.0;
  for (int i = 0; i < N; ++i) {
    U[i] = mod.alpha[i] + n_c / N * mod.beta[i] - n_t / N * t.H[i];
    alpha_sum += mod.alpha[i];
  }
  const Eigen::Map<const Eigen::VectorXd> p(pi.data(), M);

  double lin = 0.0;
  for (int i = 0; i < N; ++i) lin += pi[c.cluster_of(i)] * U[i];
  double quad = p.dot(t.Tblock * p);
  for (int j = 0; j < M; ++j)
    if (c.size(j) > 1) quad -= pi[j] * (1.0 - pi[j]) / (c.size(j) - 1.0) * t.Tblock(j, j);
  Moments out;
  out.expectation = -alpha_sum / n_c + scale * (lin + quad);

  const Eigen::VectorXd G = t.Dl * p;
  double var = 0.0;
  std::vector<double> b;
  for (int j = 0; j < M; ++j) {
    const auto& mem = c.members(j);
    const int nj = static_cast<int>(mem.size());
    b.resize(nj);
    double bmean = 0.0;
    for (int s = 0; s < nj; ++s) {
      const int i = mem[s];
      b[s] = U[i] + G(i) - pi[j] * t.Dl(i, j);
      bmean += b[s];
    }
    bmean /= nj;
    WithinStats w;
    for (int s = 0; s < nj; ++s) {
      const double bc = b[s] - bmean;
      w.sbb += bc * bc;
      w.sbd += bc * t.Dl(mem[s], j);
    }
    w.sdd = t.within_deg2[j];
    w.q2 = t.within_sq[j];
    w.tt = t.Dblock(j, j);
    var += within_variance(w, inclusion(pi[j] * nj, nj));
  }
  for (int j = 0; j < M; ++j) {
    const double vj = pi[j] * (1.0 - pi[j]) * c.size(j);
    if (vj == 0.0) continue;
    for (int l = j + 1; l < M; ++l) var += vj * pi[l] * (1.0 - pi[l]) * c.size(l) * t.cross(j, l);
  }
  out.variance = scale * scale * var;
  return out;
}

std::vector<double> checked_pi(std::span<const double> pi, const Clustering& c) {
  const auto n = exact_treated_counts(pi, c);
  std::vector<double> p(n.size());
  for (std::size_t j = 0; j < n.size(); ++j) p[j] = static_cast<double>(n[j]) / c.size(static_cast<int>(j));
  return p;
}

}  // namespace

// ---- no interference ------------------------------------------------------

std::vector<double> sutva_w(const PotentialOutcomes& po, int n_t) {
  const double N = static_cast<double>(po.y0.size());
  std::vector<double> w(po.y0.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = n_t / N * po.y0[i] + (N - n_t) / N * po.y1[i];
  return w;
}

double sutva_cond_expectation(const PotentialOutcomes& po, const Clustering& c, std::span<const double> pi) {
  require_po(po, c);
  const auto n = exact_treated_counts(pi, c);
  const int n_t = total_treated(n);
  require_nondegenerate(n_t, c.num_units());
  const int n_c = c.num_units() - n_t;
  const auto t1 = cluster_totals(po.y1, c);
  const auto t0 = cluster_totals(po.y0, c);
  double e = 0.0;
  for (int j = 0; j < c.num_clusters(); ++j) {
    const double p = static_cast<double>(n[j]) / c.size(j);
    e += p * t1[j] / n_t - (1.0 - p) * t0[j] / n_c;
  }
  return e;
}

double sutva_cond_variance(const PotentialOutcomes& po, const Clustering& c, std::span<const double> pi) {
  require_po(po, c);
  const auto n = exact_treated_counts(pi, c);
  const int n_t = total_treated(n);
  const int N = c.num_units();
  require_nondegenerate(n_t, N);
  const double n_c = N - n_t;
  const auto w = sutva_w(po, n_t);
  double s = 0.0;
  for (int j = 0; j < c.num_clusters(); ++j) {
    const double p = static_cast<double>(n[j]) / c.size(j);
    s += p * (1.0 - p) * c.size(j) * cluster_var(w, c.members(j));
  }
  const double k = static_cast<double>(N) / (n_t * n_c);
  return k * k * s;
}

MseParts sutva_cond_mse(const PotentialOutcomes& po, const Clustering& c, std::span<const double> pi) {
  MseParts out;
  out.expectation = sutva_cond_expectation(po, c, pi);
  out.bias = out.expectation - total_treatment_effect(po);
  out.variance = sutva_cond_variance(po, c, pi);
  out.mse = out.bias * out.bias + out.variance;
  return out;
}

MarginalVariance sutva_marginal_variance(const PotentialOutcomes& po, const Clustering& c, int n_t, double mu2c) {
  require_po(po, c);
  if (!c.equal_sizes()) throw UnsupportedConfiguration("marginal variance needs equal cluster sizes");
  const int N = c.num_units();
  const int M = c.num_clusters();
  require_nondegenerate(n_t, N);
  const double n_c = N - n_t;
  const auto w = sutva_w(po, n_t);
  double within = 0.0;
  for (int j = 0; j < M; ++j) within += c.size(j) * cluster_var(w, c.members(j));
  const auto tot = cluster_totals(w, c);
  const double between = var_or_zero(tot);
  const double k2 = static_cast<double>(N) * N / (static_cast<double>(n_t) * n_t * n_c * n_c);
  MarginalVariance mv;
  mv.base = within / (n_t * n_c);
  mv.slope = k2 * (M * between - within);
  mv.value = mv.base + mv.slope * mu2c;
  return mv;
}

Regime sutva_regime(const PotentialOutcomes& po, const Clustering& c, int n_t) {
  require_po(po, c);
  const int M = c.num_clusters();
  const auto w = sutva_w(po, n_t);
  double within = 0.0;
  for (int j = 0; j < M; ++j) within += c.size(j) * cluster_var(w, c.members(j));
  const double lhs = var_or_zero(cluster_totals(w, c));
  const double rhs = within / M;
  if (std::fabs(lhs - rhs) <= 1e-12 * std::max(std::fabs(lhs), std::fabs(rhs))) return Regime::Indifferent;
  return lhs > rhs ? Regime::Stratified : Regime::ClusterBased;
}

QuadraticForm sutva_mse_form(const PotentialOutcomes& po, const Clustering& c, int n_t) {
  require_po(po, c);
  const int N = c.num_units();
  const int M = c.num_clusters();
  require_nondegenerate(n_t, N);
  const double n_c = N - n_t;
  const auto w = sutva_w(po, n_t);
  const double wbar = std::accumulate(w.begin(), w.end(), 0.0) / N;
  const auto tot = cluster_totals(w, c);
  Eigen::VectorXd wt(M), splus(M);
  for (int j = 0; j < M; ++j) {
    wt(j) = tot[j] - c.size(j) * wbar;
    splus(j) = c.size(j) * cluster_var(w, c.members(j));
  }
  QuadraticForm q;
  q.Q = wt * wt.transpose();
  q.Q.diagonal() -= splus;
  q.c = splus;
  q.scale = static_cast<double>(N) * N / (static_cast<double>(n_t) * n_t * n_c * n_c);
  return q;
}

// ---- linear interference ---------------------------------------------------

double cond_expectation_interference(const LinearModel& m, const ExposureTensors& t, const Clustering& c,
                                     std::span<const double> pi) {
  return interference_moments(m, t, c, checked_pi(pi, c)).expectation;
}

double cond_variance_interference(const LinearModel& m, const ExposureTensors& t, const Clustering& c,
                                  std::span<const double> pi) {
  return interference_moments(m, t, c, checked_pi(pi, c)).variance;
}

static MseParts to_mse(const Moments& mo, double tte) {
  MseParts out;
  out.expectation = mo.expectation;
  out.bias = mo.expectation - tte;
  out.variance = mo.variance;
  out.mse = out.bias * out.bias + out.variance;
  return out;
}

MseParts cond_mse_interference(const LinearModel& m, const ExposureTensors& t, const Clustering& c,
                               std::span<const double> pi) {
  return to_mse(interference_moments(m, t, c, checked_pi(pi, c)), total_treatment_effect(m));
}

MseParts relaxed_cond_mse_interference(const LinearModel& m, const ExposureTensors& t, const Clustering& c,
                                       std::span<const double> pi) {
  for (double p : pi)
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("saturations must lie in [0, 1]");
  return to_mse(interference_moments(m, t, c, pi), total_treatment_effect(m));
}

double marginal_expectation_exact(const LinearModel& m, const ExposureTensors& t, const Clustering& c, int n_t,
                                  double mu2c) {
  if (!c.equal_sizes()) throw UnsupportedConfiguration("permutation average in closed form needs equal cluster sizes");
  const int N = c.num_units();
  const int M = c.num_clusters();
  if (M < 2) throw UnsupportedConfiguration("permutation designs need at least two clusters");
  require_nondegenerate(n_t, N);
  const double n_c = N - n_t;
  const double mu = static_cast<double>(n_t) / N;
  const double s = c.size(0);
  double u_sum = 0.0, alpha_sum = 0.0;
  for (int i = 0; i < N; ++i) {
    u_sum += m.alpha[i] + n_c / N * m.beta[i] - mu * t.H[i];
    alpha_sum += m.alpha[i];
  }
  const double diag = t.Tblock.trace();
  const double all = t.Tblock.sum();
  const double e_sq = mu * mu + mu2c;
  const double e_cross = mu * mu - mu2c / (M - 1);
  const double e_var = mu - e_sq;
  double quad = e_sq * diag + e_cross * (all - diag);
  if (s > 1) quad -= e_var * diag / (s - 1.0);
  return -alpha_sum / n_c + N / (n_t * n_c) * (mu * u_sum + quad);
}

double marginal_expectation_approx(const LinearModel& m, const Graph& g, const Clustering& c, int n_t, double mu2c) {
  const int N = c.num_units();
  const int M = c.num_clusters();
  if (M < 2) throw UnsupportedConfiguration("permutation designs need at least two clusters");
  require_nondegenerate(n_t, N);
  m.validate(N);
  const double n_c = N - n_t;
  const double beta_bar = std::accumulate(m.beta.begin(), m.beta.end(), 0.0) / N;
  const double gamma_bar = std::accumulate(m.gamma.begin(), m.gamma.end(), 0.0) / N;
  const double gp = gamma_prime(g, c, m.gamma);
  return beta_bar + static_cast<double>(N) * N / (n_t * n_c) * (gp - (gamma_bar - gp) / (M - 1)) * mu2c;
}

InterferenceRegime interference_regime(double gamma_bar, double gp, int M) {
  if (M < 2) throw UnsupportedConfiguration("regime needs at least two clusters");
  const double cut = gamma_bar / M;
  const double cluster_bias = -static_cast<double>(M) / (M - 1) * (gamma_bar - gp);
  if (std::fabs(gp - cut) <= 1e-12 * std::max(std::fabs(gp), std::fabs(cut))) return {Regime::Indifferent, -gamma_bar};
  if (gp > cut) return {Regime::ClusterBased, cluster_bias};
  return {Regime::Stratified, -gamma_bar};
}

PermutationAverage permutation_average(const LinearModel& m, const ExposureTensors& t, const Clustering& c,
                                       std::span<const double> pi, int samples, std::uint64_t seed, int threads) {
  const auto base = checked_pi(pi, c);
  const int M = c.num_clusters();
  PermutationAverage out;
  std::vector<double> ce, cv;
  if (M <= 8) {
    std::vector<double> p = base;
    std::sort(p.begin(), p.end());
    do {
      const auto mo = interference_moments(m, t, c, p);
      ce.push_back(mo.expectation);
      cv.push_back(mo.variance);
    } while (std::next_permutation(p.begin(), p.end()));
    out.exact = true;
  } else {
    if (samples < 2) throw InvalidInput("permutation_average: need at least two samples");
    ce.assign(samples, 0.0);
    cv.assign(samples, 0.0);
    parallel_for(static_cast<std::size_t>(samples), threads, [&](std::size_t s) {
      std::vector<double> p = base;
      StreamRng rng(seed, s, Stage::Permutation, 0);
      for (int j = M - 1; j > 0; --j) std::swap(p[j], p[rng.below(static_cast<std::uint64_t>(j) + 1)]);
      const auto mo = interference_moments(m, t, c, p);
      ce[s] = mo.expectation;
      cv[s] = mo.variance;
    });
  }
  const double P = static_cast<double>(ce.size());
  const double me = std::accumulate(ce.begin(), ce.end(), 0.0) / P;
  const double mv = std::accumulate(cv.begin(), cv.end(), 0.0) / P;
  double ve = 0.0;
  for (double e : ce) ve += (e - me) * (e - me);
  out.permutations = ce.size();
  out.expectation = me;
  if (out.exact) {
    out.variance = mv + ve / P;
    return out;
  }
  ve /= P - 1.0;
  out.variance = mv + ve;
  // Standard errors from the per-permutation contributions.
  std::vector<double> q(ce.size());
  for (std::size_t s = 0; s < ce.size(); ++s) q[s] = cv[s] + (ce[s] - me) * (ce[s] - me) * P / (P - 1.0);
  out.se_expectation = std::sqrt(ve / P);
  out.se_variance = std::sqrt(sample_var(q) / P);
  return out;
}

VarianceCoefficients variance_coefficients_full(const LinearModel& m, const ExposureTensors& t, const Clustering& c,
                                                int n_t) {
  const int N = c.num_units();
  const int M = c.num_clusters();
  if (t.N != N || t.M != M) throw InvalidInput("exposure tensors do not match the clustering");
  require_nondegenerate(n_t, N);
  const double nt = n_t;
  const double nc = N - n_t;
  const double mu = nt / N;
  const double K = static_cast<double>(N) * N / (nt * nt * nc * nc);
  const double skew = N * (nc - nt) / (nt * nt * nc * nc);
  const double nn = nt * nc;

  std::vector<double> wt(N), shift(N);
  for (int i = 0; i < N; ++i) {
    wt[i] = m.alpha[i] + nc / N * m.beta[i] + mu * m.gamma[i];
    shift[i] = (m.gamma[i] + t.H[i]) / M;
  }
  std::vector<double> dt(N);
  double sum_n_sw = 0.0, sum_n_sd = 0.0, sum_n_sdjj = 0.0, sum_n_cwd = 0.0;
  for (int j = 0; j < M; ++j) {
    const auto& mem = c.members(j);
    const double Nj = c.size(j);
    sum_n_sw += Nj * cluster_var(wt, mem);
    for (int l = 0; l < M; ++l) {
      for (int i : mem) dt[i] = t.Dl(i, l) - shift[i];
      const double v = cluster_var(dt, mem);
      sum_n_sd += Nj * v;
      if (l == j) {
        sum_n_sdjj += Nj * v;
        sum_n_cwd += Nj * cluster_cov(wt, dt, mem);
      }
    }
  }
  const auto wplus = cluster_totals(wt, c);
  std::vector<double> dplus(M);
  double row_var_sum = 0.0, x_all = 0.0, x_diag = 0.0;
  std::vector<double> row;
  for (int j = 0; j < M; ++j) {
    dplus[j] = t.Dblock(j, j);
    row.clear();
    for (int l = 0; l < M; ++l)
      if (l != j) row.push_back(t.Dblock(j, l));
    row_var_sum += var_or_zero(row);
    for (int l = 0; l < M; ++l) x_all += c.size(j) * static_cast<double>(c.size(l)) * t.cross(j, l);
    x_diag += c.size(j) * static_cast<double>(c.size(j)) * t.cross(j, j);
  }
  const double s_wplus = var_or_zero(wplus);
  const double s_dplus = var_or_zero(dplus);
  const double s_wdplus = cov_or_zero(wplus, dplus);

  VarianceCoefficients v;
  v.V0 = sum_n_sw / nn + x_all / (2.0 * N * N);
  v.V1 = K * M * s_wplus - K * sum_n_sw + sum_n_sd / nn - x_all / nn + 2.0 * skew * sum_n_cwd + 0.5 * skew * x_diag;
  v.V2 = 0.5 * K * M * row_var_sum - K * sum_n_sd + 0.5 * K * x_all;
  v.V3 = K * M * s_wdplus - 2.0 * K * sum_n_cwd + skew * sum_n_sdjj - skew * x_diag;
  v.V4 = 0.25 * K * M * s_dplus - K * sum_n_sdjj + 0.5 * K * x_diag;
  return v;
}

VarianceCoefficients variance_coefficients_simplified(const LinearModel& m, const GraphStats& s, const Clustering& c,
                                                      int n_t) {
  const int N = c.num_units();
  const int M = c.num_clusters();
  if (s.N != N || s.M != M) throw InvalidInput("graph statistics do not match the clustering");
  m.validate(N);
  if (!block_fixed_gamma(m, c)) throw ModelMismatch("simplified coefficients need gamma fixed within clusters");
  require_nondegenerate(n_t, N);
  const double nt = n_t;
  const double nc = N - n_t;
  const double mu = nt / N;
  const double ntil = 2.0 * nt * nc / N;
  const double k4 = 4.0 / (ntil * ntil);

  std::vector<double> w(N);
  for (int i = 0; i < N; ++i) w[i] = m.alpha[i] + nc / N * m.beta[i];
  const auto wtot = cluster_totals(w, c);
  std::vector<double> gtot(M), wg(M), gtil(M);
  double within = 0.0;
  for (int j = 0; j < M; ++j) {
    gtot[j] = c.size(j) * m.gamma[c.members(j).front()];
    wg[j] = wtot[j] + mu * gtot[j];
    gtil[j] = s.Q(j, j) * gtot[j];
    within += c.size(j) * cluster_var(w, c.members(j));
  }
  double row_var_sum = 0.0;
  std::vector<double> row;
  for (int j = 0; j < M; ++j) {
    row.clear();
    for (int l = 0; l < M; ++l)
      if (l != j) row.push_back(s.Q(j, l) * gtot[j] + s.Q(l, j) * gtot[l]);
    row_var_sum += var_or_zero(row);
  }
  VarianceCoefficients v;
  v.V0 = 2.0 / ntil * within / N;
  v.V1 = k4 * M * (var_or_zero(wg) - within / M);
  v.V2 = 0.5 * k4 * M * row_var_sum;
  v.V3 = 2.0 * k4 * M * cov_or_zero(wg, gtil);
  v.V4 = k4 * M * var_or_zero(gtil);
  return v;
}

SmoothObjective perfect_clustering_objective(const LinearModel& m, const ExposureTensors& t, const Graph& g,
                                             const Clustering& c, int n_t) {
  if (!is_perfect_clustering(g, c)) throw ModelMismatch("objective needs a perfectly clustered graph");
  const int N = c.num_units();
  const int M = c.num_clusters();
  require_nondegenerate(n_t, N);
  const double nt = n_t;
  const double nc = N - n_t;
  const double scale = N / (nt * nc);

  struct Cluster {
    double u_total = 0.0;
    double n = 0.0;
    WithinStats w;
  };
  std::vector<Cluster> cl(M);
  double alpha_sum = 0.0;
  std::vector<double> U(N);
  for (int i = 0; i < N; ++i) {
    U[i] = m.alpha[i] + nc / N * m.beta[i] - nt / N * t.H[i];
    alpha_sum += m.alpha[i];
  }
  for (int j = 0; j < M; ++j) {
    const auto& mem = c.members(j);
    Cluster& k = cl[j];
    k.n = static_cast<double>(mem.size());
    for (int i : mem) k.u_total += U[i];
    const double ubar = k.u_total / k.n;
    for (int i : mem) {
      k.w.sbb += (U[i] - ubar) * (U[i] - ubar);
      k.w.sbd += (U[i] - ubar) * t.Dl(i, j);
    }
    k.w.sdd = t.within_deg2[j];
    k.w.q2 = t.within_sq[j];
    k.w.tt = t.Dblock(j, j);
  }
  const double offset = -alpha_sum / nc - total_treatment_effect(m);

  auto eval = [cl, scale, offset, M](const Eigen::VectorXd& pi, Eigen::VectorXd* grad) {
    double bias = offset;
    double var = 0.0;
    Eigen::VectorXd dbias(M), dvar(M);
    for (int j = 0; j < M; ++j) {
      const Cluster& k = cl[j];
      const int n = static_cast<int>(k.n);
      const Inclusion inc = inclusion(pi(j) * k.n, n);
      bias += scale * (pi(j) * k.u_total + 0.5 * k.w.tt * inc.f[2]);
      dbias(j) = scale * (k.u_total + 0.5 * k.w.tt * inc.df[2] * k.n);
      double dv = 0.0;
      var += within_variance(k.w, inc, &dv);
      dvar(j) = dv * k.n;
    }
    if (grad) *grad = 2.0 * bias * dbias + scale * scale * dvar;
    return bias * bias + scale * scale * var;
  };
  return {[eval](const Eigen::VectorXd& pi) { return eval(pi, nullptr); },
          [eval](const Eigen::VectorXd& pi) {
            Eigen::VectorXd gr;
            eval(pi, &gr);
            return gr;
          }};
}

SmoothObjective relaxed_mse_objective(const LinearModel& m, const ExposureTensors& t, const Clustering& c) {
  auto value = [&m, &t, &c](const Eigen::VectorXd& pi) {
    std::vector<double> p(pi.data(), pi.data() + pi.size());
    for (double& x : p) x = std::clamp(x, 0.0, 1.0);
    return relaxed_cond_mse_interference(m, t, c, p).mse;
  };
  auto grad = [value](const Eigen::VectorXd& pi) {
    Eigen::VectorXd gr(pi.size());
    Eigen::VectorXd x = pi;
    for (Eigen::Index j = 0; j < pi.size(); ++j) {
      const double h = 1e-6;
      const double lo = std::max(0.0, pi(j) - h);
      const double hi = std::min(1.0, pi(j) + h);
      x(j) = hi;
      const double fh = value(x);
      x(j) = lo;
      const double fl = value(x);
      x(j) = pi(j);
      gr(j) = (fh - fl) / (hi - lo);
    }
    return gr;
  };
  return {value, grad};
}

// ---- stratified estimator ----------------------------------------------------

namespace {

std::vector<double> resolve_weights(std::span<const double> weights, const Clustering& c) {
  if (weights.empty()) {
    std::vector<double> w(c.num_clusters());
    for (int j = 0; j < c.num_clusters(); ++j) w[j] = static_cast<double>(c.size(j)) / c.num_units();
    return w;
  }
  if (static_cast<int>(weights.size()) != c.num_clusters()) throw InvalidInput("weights length mismatch");
  return {weights.begin(), weights.end()};
}

}  // namespace

double stratified_expectation_sutva(const PotentialOutcomes& po, const Clustering& c, std::span<const double> weights) {
  require_po(po, c);
  const auto w = resolve_weights(weights, c);
  double e = 0.0;
  for (int j = 0; j < c.num_clusters(); ++j) {
    double s = 0.0;
    for (int i : c.members(j)) s += po.y1[i] - po.y0[i];
    e += w[j] * s / c.size(j);
  }
  return e;
}

double stratified_cond_variance_sutva(const PotentialOutcomes& po, const Clustering& c, std::span<const double> pi,
                                      std::span<const double> weights) {
  require_po(po, c);
  const auto w = resolve_weights(weights, c);
  const auto n = exact_treated_counts(pi, c);
  std::vector<double> tau(po.y0.size());
  for (std::size_t i = 0; i < tau.size(); ++i) tau[i] = po.y1[i] - po.y0[i];
  double v = 0.0;
  for (int j = 0; j < c.num_clusters(); ++j) {
    if (w[j] == 0.0) continue;
    const int Nj = c.size(j);
    if (n[j] == 0 || n[j] == Nj)
      throw DegenerateAssignment("stratified estimator: cluster " + std::to_string(j) + " lacks treated or control");
    const auto& mem = c.members(j);
    v += w[j] * w[j] *
         (cluster_var(po.y1, mem) / n[j] + cluster_var(po.y0, mem) / (Nj - n[j]) - cluster_var(tau, mem) / Nj);
  }
  return v;
}

double stratified_variance_sutva(const PotentialOutcomes& po, const Clustering& c, std::span<const double> pi,
                                 std::span<const double> weights) {
  require_po(po, c);
  if (!c.equal_sizes()) throw UnsupportedConfiguration("permutation-averaged stratified variance needs equal sizes");
  const auto w = resolve_weights(weights, c);
  const auto p = checked_pi(pi, c);
  std::vector<double> q(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] <= 0.0 || p[j] >= 1.0) throw DegenerateAssignment("stratified estimator needs 0 < pi_j < 1");
    q[j] = 1.0 - p[j];
  }
  const double hp = harmonic_mean(p);
  const double hq = harmonic_mean(q);
  const double N = c.num_units();
  std::vector<double> tau(po.y0.size());
  for (std::size_t i = 0; i < tau.size(); ++i) tau[i] = po.y1[i] - po.y0[i];
  double v = 0.0;
  for (int j = 0; j < c.num_clusters(); ++j) {
    const auto& mem = c.members(j);
    v += w[j] * w[j] * (N / c.size(j)) *
         (cluster_var(po.y1, mem) / (hp * N) + cluster_var(po.y0, mem) / (hq * N) - cluster_var(tau, mem) / N);
  }
  return v;
}

double stratified_expectation_interference(const LinearModel& m, const Graph& g, const Clustering& c,
                                           std::span<const double> weights) {
  const int N = c.num_units();
  m.validate(N);
  if (g.num_nodes() != N) throw InvalidInput("graph and clustering disagree on the number of units");
  const auto w = resolve_weights(weights, c);
  double e = 0.0;
  for (int j = 0; j < c.num_clusters(); ++j) {
    if (w[j] == 0.0) continue;
    const double Nj = c.size(j);
    if (Nj < 2) throw DegenerateAssignment("stratified estimator needs clusters with at least two units");
    double beta = 0.0, inside = 0.0;
    for (int i : c.members(j)) {
      beta += m.beta[i];
      const int d = g.degree(i);
      if (d == 0) continue;
      int k_in = 0;
      for (int k : g.neighbors(i)) k_in += c.cluster_of(k) == j;
      inside += m.gamma[i] * k_in / d;
    }
    // Treated and control units of a cluster see nearly the same exposure;
    // only the 1/(N_j - 1) gap from sampling without replacement survives.
    e += w[j] * (beta / Nj - inside / (Nj * (Nj - 1.0)));
  }
  return e;
}

}  // namespace satdesign
