#include "satdesign/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "satdesign/analytics.hpp"
#include "satdesign/errors.hpp"
#include "satdesign/parallel.hpp"
#include "satdesign/rng.hpp"
#include "satdesign/stats.hpp"

namespace satdesign {

namespace {

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();

std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a == 0 || b == 0) return 0;
  if (a > kSaturated / b) return kSaturated;
  return a * b;
}

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) { return a > kSaturated - b ? kSaturated : a + b; }

std::uint64_t choose(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    // r * (n - k + i) / i stays integral at every step.
    const std::uint64_t num = static_cast<std::uint64_t>(n - k + i);
    const std::uint64_t g = std::gcd(r, static_cast<std::uint64_t>(i));
    const std::uint64_t r2 = r / g;
    const std::uint64_t i2 = static_cast<std::uint64_t>(i) / g;
    r = sat_mul(r2, num / i2);
    if (r == kSaturated) return r;
  }
  return r;
}

struct WeightedVector {
  std::vector<double> pi;
  double weight = 1.0;
};

// Every saturation vector the design can produce, with its probability.
std::vector<WeightedVector> saturation_vectors(const Design& d, int M, std::uint64_t limit) {
  std::vector<WeightedVector> out;
  switch (d.mode) {
    case DesignMode::Deterministic:
      out.push_back({d.pi, 1.0});
      break;
    case DesignMode::Permutation: {
      std::vector<double> v = d.pi;
      std::sort(v.begin(), v.end());
      do {
        out.push_back({v, 1.0});
        if (out.size() > limit) throw TooLarge("enumeration: more than " + std::to_string(limit) + " saturation vectors");
      } while (std::next_permutation(v.begin(), v.end()));
      for (auto& w : out) w.weight = 1.0 / static_cast<double>(out.size());
      break;
    }
    case DesignMode::Independent: {
      const auto support = d.dist.support();
      const std::uint64_t s = support.size();
      std::uint64_t total = 1;
      for (int j = 0; j < M; ++j) total = sat_mul(total, s);
      if (total > limit)
        throw TooLarge("enumeration: " + (total == kSaturated ? std::string(">2^64") : std::to_string(total)) +
                       " saturation vectors exceed the limit " + std::to_string(limit));
      std::vector<std::size_t> idx(M, 0);
      for (std::uint64_t n = 0; n < total; ++n) {
        WeightedVector w;
        w.pi.resize(M);
        for (int j = 0; j < M; ++j) {
          w.pi[j] = support[idx[j]].first;
          w.weight *= support[idx[j]].second;
        }
        if (w.weight > 0.0) out.push_back(std::move(w));
        for (int j = 0; j < M; ++j) {
          if (++idx[j] < s) break;
          idx[j] = 0;
        }
      }
      break;
    }
  }
  return out;
}

// Revolving-door order: consecutive k-subsets of {0..n-1} differ by one
// element in and one out. Stored flat, k entries per subset, ascending.
void revolving_door(int n, int k, std::vector<int>& out) {
  if (k == 0) return;
  if (k == n) {
    for (int i = 0; i < n; ++i) out.push_back(i);
    return;
  }
  revolving_door(n - 1, k, out);
  std::vector<int> tail;
  revolving_door(n - 1, k - 1, tail);
  const std::size_t stride = k - 1;
  const std::size_t count = stride == 0 ? 1 : tail.size() / stride;
  for (std::size_t r = count; r-- > 0;) {
    for (std::size_t e = 0; e < stride; ++e) out.push_back(tail[r * stride + e]);
    out.push_back(n - 1);
  }
}

struct ComboList {
  int k = 0;
  std::uint64_t count = 1;
  std::vector<int> flat;
  const int* at(std::uint64_t r) const { return flat.data() + r * k; }
};

// Incremental state of outcomes under flips of single units.
class FlipState {
 public:
  FlipState(const Graph& g, const LinearModel& m, const Clustering& c)
      : g_(g), m_(m), c_(c), z_(c.num_units(), 0), cnt_(c.num_units(), 0), y_(c.num_units(), 0.0) {}

  void reset(const std::vector<std::uint8_t>& z) {
    z_ = z;
    const int N = c_.num_units();
    for (int i = 0; i < N; ++i) {
      int s = 0;
      for (int k : g_.neighbors(i)) s += z_[k];
      cnt_[i] = s;
      y_[i] = outcome(i);
    }
    refresh();
  }

  void flip(int u) {
    const double old = y_[u];
    z_[u] ^= 1;
    y_[u] = outcome(u);
    account(u, old, z_[u] ? 0 : 1);
    const int delta = z_[u] ? 1 : -1;
    for (int k : g_.neighbors(u)) {
      const double prev = y_[k];
      cnt_[k] += delta;
      y_[k] = outcome(k);
      account(k, prev, z_[k]);
    }
  }

  // Recomputes running sums from scratch to stop rounding drift.
  void refresh() {
    const int M = c_.num_clusters();
    treated_sum_.assign(M, 0.0);
    all_sum_.assign(M, 0.0);
    for (int i = 0; i < c_.num_units(); ++i) {
      const int j = c_.cluster_of(i);
      all_sum_[j] += y_[i];
      if (z_[i]) treated_sum_[j] += y_[i];
    }
  }

  double treated(int j) const { return treated_sum_[j]; }
  double all(int j) const { return all_sum_[j]; }

 private:
  double outcome(int i) const {
    const int deg = g_.degree(i);
    const double rho = deg == 0 ? 0.0 : static_cast<double>(cnt_[i]) / deg;
    return m_.alpha[i] + m_.beta[i] * z_[i] + m_.gamma[i] * rho;
  }
  // Moves unit i's contribution from (old value, old treatment) to the current one.
  void account(int i, double old, int was_treated) {
    const int j = c_.cluster_of(i);
    all_sum_[j] += y_[i] - old;
    if (was_treated) treated_sum_[j] -= old;
    if (z_[i]) treated_sum_[j] += y_[i];
  }

  const Graph& g_;
  const LinearModel& m_;
  const Clustering& c_;
  std::vector<std::uint8_t> z_;
  std::vector<int> cnt_;
  std::vector<double> y_;
  std::vector<double> treated_sum_;
  std::vector<double> all_sum_;
};

bool degenerate_counts(const std::vector<int>& counts, const Clustering& c, const EstimatorSpec& est,
                       const std::vector<double>& weights) {
  const int n_t = std::accumulate(counts.begin(), counts.end(), 0);
  if (est.kind == EstimatorKind::DiffInMeans) return n_t == 0 || n_t == c.num_units();
  for (int j = 0; j < c.num_clusters(); ++j)
    if (weights[j] != 0.0 && (counts[j] == 0 || counts[j] == c.size(j))) return true;
  return false;
}

}  // namespace

std::uint64_t enumeration_size(const Design& d, const Clustering& c) {
  d.validate(c.num_clusters());
  const auto vectors = saturation_vectors(d, c.num_clusters(), kSaturated);
  std::uint64_t total = 0;
  for (const auto& v : vectors) {
    const auto counts = treated_counts(v.pi, c);
    std::uint64_t n = 1;
    for (int j = 0; j < c.num_clusters(); ++j) n = sat_mul(n, choose(c.size(j), counts[j]));
    total = sat_add(total, n);
  }
  return total;
}

EnumerationResult enumerate_exact(const Design& d, const Clustering& c, const Graph& g, const LinearModel& m,
                                  const EstimatorSpec& est, std::uint64_t limit) {
  const int N = c.num_units();
  const int M = c.num_clusters();
  if (g.num_nodes() != N) throw InvalidInput("enumeration: graph and clustering sizes differ");
  m.validate(N);
  d.validate(M);
  const auto vectors = saturation_vectors(d, M, limit);
  std::vector<std::vector<int>> counts;
  std::uint64_t total = 0;
  for (const auto& v : vectors) {
    counts.push_back(treated_counts(v.pi, c));
    std::uint64_t n = 1;
    for (int j = 0; j < M; ++j) n = sat_mul(n, choose(c.size(j), counts.back()[j]));
    total = sat_add(total, n);
  }
  if (total > limit)
    throw TooLarge("enumeration: " + (total == kSaturated ? std::string(">2^64") : std::to_string(total)) +
                   " assignments exceed the limit " + std::to_string(limit));

  const std::vector<double> weights = est.weights.empty() ? default_weights(c) : est.weights;
  if (static_cast<int>(weights.size()) != M) throw InvalidInput("estimator weights length mismatch");
  std::map<std::pair<int, int>, ComboList> cache;
  auto combos = [&](int n, int k) -> const ComboList& {
    auto it = cache.find({n, k});
    if (it != cache.end()) return it->second;
    ComboList cl;
    cl.k = k;
    cl.count = choose(n, k);
    cl.flat.reserve(cl.count * k);
    revolving_door(n, k, cl.flat);
    return cache.emplace(std::make_pair(n, k), std::move(cl)).first->second;
  };

  EnumerationResult res;
  res.tte = total_treatment_effect(m);
  FlipState state(g, m, c);
  double wsum = 0.0, mean_acc = 0.0, second_acc = 0.0;
  std::vector<std::uint8_t> z(N);
  std::vector<const ComboList*> lists(M);
  std::vector<std::uint64_t> pos(M);
  std::vector<int> dir(M);

  for (std::size_t s = 0; s < vectors.size(); ++s) {
    const auto& cnt = counts[s];
    std::uint64_t visits_expected = 1;
    for (int j = 0; j < M; ++j) {
      lists[j] = &combos(c.size(j), cnt[j]);
      visits_expected *= lists[j]->count;
    }
    ++res.saturation_vectors;
    if (degenerate_counts(cnt, c, est, weights)) {
      res.excluded += visits_expected;
      continue;
    }
    int n_t = 0;
    for (int j = 0; j < M; ++j) n_t += cnt[j];
    const int n_c = N - n_t;

    std::fill(z.begin(), z.end(), 0);
    for (int j = 0; j < M; ++j) {
      pos[j] = 0;
      dir[j] = 1;
      const auto& mem = c.members(j);
      const int* first = lists[j]->at(0);
      for (int e = 0; e < cnt[j]; ++e) z[mem[first[e]]] = 1;
    }
    state.reset(z);

    auto estimate = [&] {
      if (est.kind == EstimatorKind::DiffInMeans) {
        double st = 0.0, sa = 0.0;
        for (int j = 0; j < M; ++j) {
          st += state.treated(j);
          sa += state.all(j);
        }
        return st / n_t - (sa - st) / n_c;
      }
      double tau = 0.0;
      for (int j = 0; j < M; ++j) {
        if (weights[j] == 0.0) continue;
        const double t = state.treated(j);
        tau += weights[j] * (t / cnt[j] - (state.all(j) - t) / (c.size(j) - cnt[j]));
      }
      return tau;
    };

    // Welford over the assignments of this saturation vector.
    double mean = 0.0, m2 = 0.0;
    std::uint64_t visits = 0;
    for (;;) {
      const double x = estimate();
      ++visits;
      const double delta = x - mean;
      mean += delta / static_cast<double>(visits);
      m2 += delta * (x - mean);
      // Reflected mixed-radix step: exactly one cluster changes.
      int j = 0;
      while (j < M) {
        const std::int64_t next = static_cast<std::int64_t>(pos[j]) + dir[j];
        if (next >= 0 && next < static_cast<std::int64_t>(lists[j]->count)) break;
        dir[j] = -dir[j];
        ++j;
      }
      if (j == M) break;
      const int* from = lists[j]->at(pos[j]);
      pos[j] += dir[j];
      const int* to = lists[j]->at(pos[j]);
      const auto& mem = c.members(j);
      const int k = cnt[j];
      // Symmetric difference of two sorted subsets.
      int a = 0, b = 0;
      while (a < k || b < k) {
        if (b >= k || (a < k && from[a] < to[b])) {
          state.flip(mem[from[a++]]);
        } else if (a >= k || to[b] < from[a]) {
          state.flip(mem[to[b++]]);
        } else {
          ++a;
          ++b;
        }
      }
      if ((visits & 1023) == 0) state.refresh();
    }
    if (visits != visits_expected) throw Error("enumeration visited an unexpected number of assignments");
    res.assignments += visits;
    const double w = vectors[s].weight;
    wsum += w;
    mean_acc += w * mean;
    second_acc += w * (m2 / static_cast<double>(visits) + mean * mean);
  }
  if (wsum <= 0.0) throw DegenerateAssignment("enumeration: every assignment is degenerate for this estimator");
  res.mean = mean_acc / wsum;
  res.variance = std::max(0.0, second_acc / wsum - res.mean * res.mean);
  res.mse = res.variance + (res.mean - res.tte) * (res.mean - res.tte);
  return res;
}

McSummary summarize(std::span<const double> draws, double tte) {
  McSummary s;
  s.tte = tte;
  double sum = 0.0;
  for (double x : draws) {
    if (std::isnan(x)) {
      ++s.degenerate;
      continue;
    }
    sum += x;
    ++s.replications;
  }
  const double R = s.replications;
  if (s.replications < 2) throw DegenerateAssignment("summary needs at least two non-degenerate draws");
  s.mean = sum / R;
  double m2 = 0.0, m4 = 0.0, e2 = 0.0, e4 = 0.0;
  for (double x : draws) {
    if (std::isnan(x)) continue;
    const double d = x - s.mean;
    const double e = (x - tte) * (x - tte);
    m2 += d * d;
    m4 += d * d * d * d;
    e2 += e;
    e4 += e * e;
  }
  s.variance = m2 / R;
  s.bias = s.mean - tte;
  s.mse = e2 / R;
  s.se_mean = std::sqrt(m2 / (R - 1.0) / R);
  s.se_variance = std::sqrt(std::max(0.0, m4 / R - s.variance * s.variance) / R);
  s.se_mse = std::sqrt(std::max(0.0, e4 / R - s.mse * s.mse) / R);
  return s;
}

McSummary replicate(const Design& d, const Clustering& c, const Graph& g, const LinearModel& m,
                    const EstimatorSpec& est, int replications, std::uint64_t seed, int threads,
                    std::vector<double>* draws_out) {
  if (replications < 2) throw InvalidInput("replicate: need at least two replications");
  const int N = c.num_units();
  if (g.num_nodes() != N) throw InvalidInput("replicate: graph and clustering sizes differ");
  m.validate(N);
  d.validate(c.num_clusters());
  std::vector<double> draws(replications);
  parallel_for(static_cast<std::size_t>(replications), threads, [&](std::size_t r) {
    const Assignment a = sample_assignment(d, c, seed, r);
    std::vector<double> y;
    evaluate_into(m, g, a.z, y);
    try {
      draws[r] = est(y, a.z, c);
    } catch (const DegenerateAssignment&) {
      draws[r] = std::numeric_limits<double>::quiet_NaN();
    }
  });
  McSummary s = summarize(draws, total_treatment_effect(m));
  s.seed = seed;
  if (draws_out) *draws_out = std::move(draws);
  return s;
}

namespace {

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t index, Stage stage, std::uint64_t tag) {
  return StreamRng(seed, index, stage, tag)();
}

// Beta quantile saturations rounded to counts, mirrored so the mean is exact.
std::vector<double> symmetric_counts(const std::vector<double>& pi, int size) {
  const int M = static_cast<int>(pi.size());
  std::vector<double> out(M);
  for (int j = 0; j < M / 2; ++j) {
    const double n = std::llround(pi[j] * size);
    out[j] = n / size;
    out[M - 1 - j] = (size - n) / size;
  }
  if (M % 2 == 1) out[M / 2] = std::llround(0.5 * size) / static_cast<double>(size);
  return out;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = (v.size() - 1) * q;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

}  // namespace

VarShapeResult reproduce_var_shape(const VarShapeConfig& cfg) {
  if (cfg.M < 2 || cfg.N < 2 * cfg.M || cfg.N % cfg.M != 0)
    throw InvalidInput("var-shape: N must be a multiple of M with at least two units per cluster");
  if (cfg.realizations < 1 || cfg.replications < 2) throw InvalidInput("var-shape: need realizations >= 1, R >= 2");
  if (!(cfg.target_ratio > 0.0)) throw DomainError("var-shape: target ratio must be positive");
  const int size = cfg.N / cfg.M;
  if (size % 2 != 0) throw InvalidInput("var-shape: cluster size must be even so that half can be treated");
  const Clustering c = Clustering::from_sizes(std::vector<int>(cfg.M, size));
  const std::vector<double> lambdas = cfg.lambdas.empty() ? default_lambda_grid() : cfg.lambdas;
  const auto inf_it = std::find_if(lambdas.begin(), lambdas.end(), [](double l) { return std::isinf(l); });
  if (inf_it == lambdas.end()) throw InvalidInput("var-shape: the lambda grid must contain inf (the reference)");
  const std::size_t ref = static_cast<std::size_t>(inf_it - lambdas.begin());
  const int n_t = cfg.N / 2;

  std::vector<std::vector<double>> designs;
  for (double l : lambdas) designs.push_back(symmetric_counts(beta_quantile_pi(l, cfg.M), size));

  VarShapeResult res;
  std::vector<std::vector<double>> predicted;
  const Eigen::MatrixXd A = decay_block_matrix(cfg.M, cfg.decay);
  for (int r = 0; r < cfg.realizations; ++r) {
    const Graph g = sbm_generate(c, A, sub_seed(cfg.seed, r, Stage::Graph, 0));
    OutcomeSpec spec;
    spec.alpha.unit = {ValueDist::Kind::Normal, 0.0, 1.0};
    spec.alpha.center_within_clusters = true;
    spec.beta.cluster = {ValueDist::Kind::Constant, 1.0, 0.0};
    spec.gamma.cluster = {ValueDist::Kind::Constant, 1.0, 0.0};
    LinearModel m = generate_outcomes(spec, c, sub_seed(cfg.seed, r, Stage::Outcomes, 0));
    const std::vector<double> xi = m.alpha;

    // V1 is quadratic in sigma (alpha = sigma xi); V2 does not involve alpha.
    auto coeffs = [&](double sigma) {
      for (int i = 0; i < cfg.N; ++i) m.alpha[i] = sigma * xi[i];
      return variance_coefficients_full(m, exposure_tensors(m, g, c), c, n_t);
    };
    const VarianceCoefficients v0 = coeffs(0.0), vp = coeffs(1.0), vm = coeffs(-1.0);
    const double qa = 0.5 * (vp.V1 + vm.V1) - v0.V1;
    const double qb = 0.5 * (vp.V1 - vm.V1);
    const double target = -2.0 * cfg.target_ratio * v0.V2;
    // qa s^2 + qb s + (V1(0) - target) = 0, smallest positive root.
    double sigma = std::numeric_limits<double>::quiet_NaN();
    const double qc = v0.V1 - target;
    if (std::fabs(qa) > 0.0) {
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        const double r1 = (-qb - sq) / (2.0 * qa), r2 = (-qb + sq) / (2.0 * qa);
        for (double root : {std::min(r1, r2), std::max(r1, r2)})
          if (root > 0.0 && std::isnan(sigma)) sigma = root;
      }
    } else if (qb != 0.0 && -qc / qb > 0.0) {
      sigma = -qc / qb;
    }
    if (std::isnan(sigma))
      throw AssumptionViolation("var-shape: no sigma_alpha reaches the target ratio for realization " +
                                std::to_string(r));
    const VarianceCoefficients v = coeffs(sigma);
    res.sigma_alpha.push_back(sigma);

    std::vector<double> var(lambdas.size()), pred(lambdas.size());
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      Design d;
      d.mode = DesignMode::Permutation;
      d.pi = designs[k];
      const McSummary s = replicate(d, c, g, m, EstimatorSpec{}, cfg.replications,
                                    sub_seed(cfg.seed, r, Stage::Permutation, k), cfg.threads);
      var[k] = s.variance;
      pred[k] = variance_from_moments(v, design_moments(designs[k]));
    }
    res.reference_variance.push_back(var[ref]);
    std::vector<double> rel(lambdas.size());
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
      rel[k] = 100.0 * var[k] / var[ref];
      pred[k] = 100.0 * pred[k] / pred[ref];
    }
    res.variance.push_back(var);
    res.relative.push_back(rel);
    predicted.push_back(pred);
  }
  const double R = cfg.realizations;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    VarShapePoint p;
    p.lambda = lambdas[k];
    p.mu2c = design_moments(designs[k]).mu2c;
    std::vector<double> col;
    double pm = 0.0;
    for (int r = 0; r < cfg.realizations; ++r) {
      col.push_back(res.relative[r][k]);
      pm += predicted[r][k];
    }
    p.rel_mean = std::accumulate(col.begin(), col.end(), 0.0) / R;
    p.rel_se = col.size() > 1 ? std::sqrt(sample_var(col) / R) : 0.0;
    p.rel_q025 = quantile(col, 0.025);
    p.rel_q975 = quantile(col, 0.975);
    p.predicted_rel_mean = pm / R;
    res.points.push_back(p);
  }
  return res;
}

DeterministicResult reproduce_deterministic_comparison(const DeterministicConfig& cfg) {
  if (cfg.M < 2 || cfg.cluster_size < 2) throw InvalidInput("deterministic: need M >= 2 clusters of size >= 2");
  if (cfg.realizations < 1 || cfg.replications < 2) throw InvalidInput("deterministic: need realizations >= 1, R >= 2");
  if ((cfg.M * cfg.cluster_size) % 2 != 0) throw InvalidInput("deterministic: N must be even");
  if (cfg.M % 2 != 0) throw InvalidInput("deterministic: M must be even for the cluster-based design");
  const Clustering c = Clustering::from_sizes(std::vector<int>(cfg.M, cfg.cluster_size));
  const int N = c.num_units();
  const int n_t = N / 2;
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(cfg.M, cfg.M) * cfg.p_in;

  std::vector<double> cluster_based(cfg.M, 0.0);
  std::fill(cluster_based.begin() + cfg.M / 2, cluster_based.end(), 1.0);

  DeterministicResult res;
  for (int r = 0; r < cfg.realizations; ++r) {
    const Graph g = sbm_generate(c, A, sub_seed(cfg.seed, r, Stage::Graph, 0));
    OutcomeSpec spec;
    spec.alpha.cluster = {ValueDist::Kind::Uniform, cfg.alpha_lo, cfg.alpha_hi};
    spec.alpha.unit = {ValueDist::Kind::Normal, 0.0, cfg.alpha_noise_sd};
    spec.beta.cluster = {ValueDist::Kind::Constant, 1.0, 0.0};
    spec.gamma.cluster = {ValueDist::Kind::Uniform, cfg.gamma_lo, cfg.gamma_hi};
    const LinearModel m = generate_outcomes(spec, c, sub_seed(cfg.seed, r, Stage::Outcomes, 0));
    const ExposureTensors t = exposure_tensors(m, g, c);

    const SmoothObjective f = perfect_clustering_objective(m, t, g, c, n_t);
    QpOptions qp = cfg.qp;
    qp.seed = sub_seed(cfg.seed, r, Stage::Optimizer, 0);
    const QpResult q = minimize_design(f, cfg.M, 0.5, qp);
    const std::vector<double> pi_hat = snap_to_counts(f, q.pi, c.sizes());
    res.pi_hat.push_back(pi_hat);

    struct Entry {
      const char* name;
      DesignMode mode;
      const std::vector<double>* pi;
    };
    const Entry entries[] = {{"deterministic", DesignMode::Deterministic, &pi_hat},
                             {"randomized", DesignMode::Permutation, &cluster_based},
                             {"rerandomized", DesignMode::Permutation, &pi_hat}};
    for (std::size_t e = 0; e < 3; ++e) {
      Design d;
      d.mode = entries[e].mode;
      d.pi = *entries[e].pi;
      DesignRun run;
      run.realization = r;
      run.design = entries[e].name;
      run.mc = replicate(d, c, g, m, EstimatorSpec{}, cfg.replications,
                         sub_seed(cfg.seed, r, Stage::Permutation, e), cfg.threads);
      run.mu2c = design_moments(d.pi).mu2c;
      run.predicted_mse = d.mode == DesignMode::Deterministic ? cond_mse_interference(m, t, c, d.pi).mse
                                                               : std::numeric_limits<double>::quiet_NaN();
      res.runs.push_back(std::move(run));
    }
  }
  return res;
}

}  // namespace satdesign
