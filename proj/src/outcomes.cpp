#include "satdesign/outcomes.hpp"

#include <cmath>
#include <random>
#include <string>

#include "satdesign/errors.hpp"
#include "satdesign/rng.hpp"

namespace satdesign {

void LinearModel::validate(int n) const {
  if (static_cast<int>(alpha.size()) != n || static_cast<int>(beta.size()) != n ||
      static_cast<int>(gamma.size()) != n)
    throw InvalidInput("outcome model: coefficient vectors must have one entry per unit (" + std::to_string(n) + ")");
  for (int i = 0; i < n; ++i)
    if (!std::isfinite(alpha[i]) || !std::isfinite(beta[i]) || !std::isfinite(gamma[i]))
      throw InvalidInput("outcome model: non-finite coefficient at unit " + std::to_string(i));
}

bool LinearModel::sutva() const {
  for (double g : gamma)
    if (g != 0.0) return false;
  return true;
}

void evaluate_into(const LinearModel& m, const Graph& g, std::span<const std::uint8_t> z, std::vector<double>& y) {
  const int n = g.num_nodes();
  y.resize(n);
  for (int i = 0; i < n; ++i) {
    double v = m.alpha[i] + (z[i] ? m.beta[i] : 0.0);
    const int d = g.degree(i);
    if (d > 0 && m.gamma[i] != 0.0) {
      int treated = 0;
      for (int k : g.neighbors(i)) treated += z[k];
      v += m.gamma[i] * treated / static_cast<double>(d);
    }
    y[i] = v;
  }
}

std::vector<double> evaluate(const LinearModel& m, const Graph& g, std::span<const std::uint8_t> z) {
  m.validate(g.num_nodes());
  if (static_cast<int>(z.size()) != g.num_nodes()) throw InvalidInput("evaluate: assignment length mismatch");
  std::vector<double> y;
  evaluate_into(m, g, z, y);
  return y;
}

double total_treatment_effect(const LinearModel& m) {
  if (m.alpha.empty()) throw InvalidInput("empty outcome model");
  double s = 0.0;
  for (std::size_t i = 0; i < m.beta.size(); ++i) s += m.beta[i] + m.gamma[i];
  return s / static_cast<double>(m.beta.size());
}

PotentialOutcomes sutva_outcomes(const LinearModel& m) {
  if (!m.sutva()) throw ModelMismatch("SUTVA forms need gamma == 0");
  PotentialOutcomes po{m.alpha, m.alpha};
  for (std::size_t i = 0; i < m.alpha.size(); ++i) po.y1[i] += m.beta[i];
  return po;
}

double total_treatment_effect(const PotentialOutcomes& po) {
  if (po.y0.empty() || po.y0.size() != po.y1.size()) throw InvalidInput("potential outcomes: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < po.y0.size(); ++i) s += po.y1[i] - po.y0[i];
  return s / static_cast<double>(po.y0.size());
}

bool block_fixed_gamma(const LinearModel& m, const Clustering& c, double tol) {
  for (int j = 0; j < c.num_clusters(); ++j) {
    const double g0 = m.gamma[c.members(j).front()];
    for (int i : c.members(j))
      if (std::fabs(m.gamma[i] - g0) > tol) return false;
  }
  return true;
}

ExposureTensors exposure_tensors(const LinearModel& m, const Graph& g, const Clustering& c) {
  const int N = c.num_units();
  const int M = c.num_clusters();
  if (g.num_nodes() != N) throw InvalidInput("graph and clustering disagree on the number of units");
  m.validate(N);
  ExposureTensors t;
  t.N = N;
  t.M = M;
  const std::size_t slots = 2 * g.num_edges();
  t.T.assign(slots, 0.0);
  t.D.assign(slots, 0.0);
  t.H.assign(N, 0.0);
  std::vector<double> share(N, 0.0);  // gamma_i / |N_i|
  for (int i = 0; i < N; ++i)
    if (g.degree(i) > 0) share[i] = m.gamma[i] / g.degree(i);

  t.Dl = Eigen::MatrixXd::Zero(N, M);
  t.Tblock = Eigen::MatrixXd::Zero(M, M);
  t.Dblock = Eigen::MatrixXd::Zero(M, M);
  t.within_sq.assign(M, 0.0);
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(M, M);
  for (int i = 0; i < N; ++i) {
    const int ci = c.cluster_of(i);
    std::int64_t s = g.offset(i);
    for (int k : g.neighbors(i)) {
      const int ck = c.cluster_of(k);
      const double tik = share[i];
      const double dik = share[i] + share[k];
      t.T[s] = tik;
      t.D[s] = dik;
      ++s;
      t.H[i] += share[k];
      t.Dl(i, ck) += dik;
      t.Tblock(ci, ck) += tik;
      t.Dblock(ci, ck) += dik;
      sq(ci, ck) += dik * dik;
    }
  }
  Eigen::MatrixXd row_sq = Eigen::MatrixXd::Zero(M, M);  // sum_{i in C_j} (D_i^{(l)})^2
  for (int i = 0; i < N; ++i) row_sq.row(c.cluster_of(i)) += t.Dl.row(i).cwiseAbs2();
  t.within_deg2.assign(M, 0.0);
  t.cross = Eigen::MatrixXd::Zero(M, M);
  for (int j = 0; j < M; ++j) {
    t.within_sq[j] = sq(j, j);
    t.within_deg2[j] = row_sq(j, j);
    const double Nj = c.size(j);
    for (int l = 0; l < M; ++l) {
      const double Nl = c.size(l);
      if (Nj < 2 || Nl < 2) continue;
      const double ss = sq(j, l) - row_sq(j, l) / Nl - row_sq(l, j) / Nj + t.Dblock(j, l) * t.Dblock(j, l) / (Nj * Nl);
      t.cross(j, l) = ss / ((Nj - 1.0) * (Nl - 1.0));
    }
  }
  return t;
}

namespace {

double draw(const ValueDist& d, StreamRng& rng) {
  switch (d.kind) {
    case ValueDist::Kind::Constant:
      return d.a;
    case ValueDist::Kind::Normal: {
      if (d.b < 0.0) throw DomainError("normal draw: negative standard deviation");
      std::normal_distribution<double> n(d.a, d.b);
      return n(rng);
    }
    case ValueDist::Kind::Uniform:
      if (d.b < d.a) throw DomainError("uniform draw: upper bound below lower bound");
      return d.a + (d.b - d.a) * rng.uniform();
  }
  return 0.0;
}

std::vector<double> draw_component(const ComponentSpec& spec, const Clustering& c, std::uint64_t seed, int slot) {
  const int N = c.num_units();
  const int M = c.num_clusters();
  StreamRng crng(seed, 0, Stage::Outcomes, 2 * slot);
  StreamRng urng(seed, 0, Stage::Outcomes, 2 * slot + 1);
  std::vector<double> level(M);
  for (int j = 0; j < M; ++j) level[j] = draw(spec.cluster, crng);
  std::vector<double> v(N);
  for (int i = 0; i < N; ++i) v[i] = level[c.cluster_of(i)] + draw(spec.unit, urng);
  if (spec.center_within_clusters) {
    for (int j = 0; j < M; ++j) {
      double mean = 0.0;
      for (int i : c.members(j)) mean += v[i];
      mean /= c.size(j);
      for (int i : c.members(j)) v[i] -= mean;
    }
  }
  return v;
}

}  // namespace

LinearModel generate_outcomes(const OutcomeSpec& spec, const Clustering& c, std::uint64_t seed) {
  LinearModel m;
  m.alpha = draw_component(spec.alpha, c, seed, 0);
  m.beta = draw_component(spec.beta, c, seed, 1);
  m.gamma = draw_component(spec.gamma, c, seed, 2);
  return m;
}

}  // namespace satdesign
