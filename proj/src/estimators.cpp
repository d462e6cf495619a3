#include "satdesign/estimators.hpp"

#include <string>

#include "satdesign/errors.hpp"

namespace satdesign {

double diff_in_means(std::span<const double> y, std::span<const std::uint8_t> z) {
  if (y.size() != z.size()) throw InvalidInput("diff_in_means: length mismatch");
  double st = 0.0, sc = 0.0;
  std::size_t nt = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (z[i]) {
      st += y[i];
      ++nt;
    } else {
      sc += y[i];
    }
  }
  const std::size_t nc = y.size() - nt;
  if (nt == 0 || nc == 0) throw DegenerateAssignment("diff_in_means: no treated or no control units");
  return st / static_cast<double>(nt) - sc / static_cast<double>(nc);
}

std::vector<double> default_weights(const Clustering& c) {
  std::vector<double> w(c.num_clusters());
  for (int j = 0; j < c.num_clusters(); ++j) w[j] = static_cast<double>(c.size(j)) / c.num_units();
  return w;
}

double stratified_estimate(std::span<const double> y, std::span<const std::uint8_t> z, const Clustering& c,
                           std::span<const double> weights) {
  if (static_cast<int>(y.size()) != c.num_units() || y.size() != z.size())
    throw InvalidInput("stratified_estimate: length mismatch");
  std::vector<double> def;
  if (weights.empty()) {
    def = default_weights(c);
    weights = def;
  }
  if (static_cast<int>(weights.size()) != c.num_clusters()) throw InvalidInput("stratified_estimate: weights length");
  double est = 0.0;
  for (int j = 0; j < c.num_clusters(); ++j) {
    if (weights[j] == 0.0) continue;
    double st = 0.0, sc = 0.0;
    int nt = 0;
    for (int i : c.members(j)) {
      if (z[i]) {
        st += y[i];
        ++nt;
      } else {
        sc += y[i];
      }
    }
    const int nc = c.size(j) - nt;
    if (nt == 0 || nc == 0)
      throw DegenerateAssignment("stratified_estimate: cluster " + std::to_string(j) + " has no treated or no control");
    est += weights[j] * (st / nt - sc / nc);
  }
  return est;
}

double EstimatorSpec::operator()(std::span<const double> y, std::span<const std::uint8_t> z,
                                 const Clustering& c) const {
  if (kind == EstimatorKind::DiffInMeans) return diff_in_means(y, z);
  return stratified_estimate(y, z, c, weights);
}

}  // namespace satdesign
