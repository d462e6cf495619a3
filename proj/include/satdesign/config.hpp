#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "satdesign/designs.hpp"
#include "satdesign/estimators.hpp"
#include "satdesign/graph.hpp"
#include "satdesign/montecarlo.hpp"
#include "satdesign/optimize.hpp"
#include "satdesign/outcomes.hpp"

namespace satdesign {

inline constexpr int kConfigVersion = 1;

struct GraphConfig {
  std::string source = "sbm";  // sbm | files
  std::vector<int> sizes{50, 50};
  std::string block = "constant";  // constant | decay | matrix
  double p_in = 0.5;
  double p_out = 0.0;
  double rate = 0.5;
  std::vector<std::vector<double>> matrix;
  std::string edges;       // files
  std::string membership;  // files
};

struct OutcomesConfig {
  std::string source = "spec";  // spec | file
  std::string file;
  OutcomeSpec spec;
};

struct DesignConfig {
  std::string mode = "permutation";  // independent | permutation | deterministic
  std::string family = "constant";   // constant | beta | two_point | three_point | explicit
  double mean = 0.5;
  double lambda = 1.0;
  double d = 0.0;
  double fraction = 0.0;
  std::vector<double> pi;  // explicit
  Distribution dist;       // independent mode
};

struct AnalysisConfig {
  std::string tier = "both";  // full | simplified | both
  std::vector<double> pi;     // conditional values; empty -> design pi
  double eps2 = 0.0;          // <= 0: half of min row sum of the proxy P
  double eps3 = 2.0;
};

struct OptimizeConfig {
  // family | beta | sutva-mse | interference-mse
  std::string objective = "family";
  double mean = 0.5;
  bool snap = true;
  QpOptions qp;
};

struct RunConfig {
  int version = kConfigVersion;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string output = "out";
  GraphConfig graph;
  OutcomesConfig outcomes;
  DesignConfig design;
  std::string estimator = "diff_in_means";  // diff_in_means | stratified
  std::vector<double> weights;
  AnalysisConfig analysis;
  OptimizeConfig optimize;
  int replications = 1000;
  std::uint64_t limit = 10'000'000;
  VarShapeConfig var_shape;
  DeterministicConfig deterministic;
};

// Loads a YAML config. Unknown keys and malformed values raise InvalidInput.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text);
// Canonical YAML with every field explicit.
std::string dump_config(const RunConfig& cfg);
// FNV-1a 64 of dump_config with threads and output normalized, as 16 hex digits.
std::string config_hash(const RunConfig& cfg);

Design build_design(const DesignConfig& d, const Clustering& c);
EstimatorSpec build_estimator(const RunConfig& cfg);
Eigen::MatrixXd build_block_matrix(const GraphConfig& g);

}  // namespace satdesign
