#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "satdesign/graph.hpp"

namespace satdesign {

double diff_in_means(std::span<const double> y, std::span<const std::uint8_t> z);

std::vector<double> default_weights(const Clustering& c);
// sum_j w_j (treated mean in C_j - control mean in C_j). Clusters with zero
// weight are skipped; a weighted cluster with n_j in {0, N_j} is degenerate.
double stratified_estimate(std::span<const double> y, std::span<const std::uint8_t> z, const Clustering& c,
                           std::span<const double> weights = {});

enum class EstimatorKind { DiffInMeans, Stratified };

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::DiffInMeans;
  std::vector<double> weights;  // empty -> N_j / N
  double operator()(std::span<const double> y, std::span<const std::uint8_t> z, const Clustering& c) const;
};

}  // namespace satdesign
