#include "satdesign/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "satdesign/errors.hpp"

namespace satdesign {

namespace {

void check_keys(const YAML::Node& node, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) throw InvalidInput("config: '" + where + "' must be a mapping");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!ok.count(key)) throw InvalidInput("config: unknown key '" + key + "' in '" + where + "'");
  }
}

template <class T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
  const YAML::Node v = node[key];
  if (!v) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception&) {
    throw InvalidInput("config: bad value for '" + where + "." + key + "'");
  }
}

void read_double(const YAML::Node& node, const char* key, double& out, const std::string& where) {
  const YAML::Node v = node[key];
  if (!v) return;
  if (!v.IsScalar()) throw InvalidInput("config: '" + where + "." + key + "' must be a number");
  const auto s = v.as<std::string>();
  if (s == "inf" || s == ".inf") {
    out = std::numeric_limits<double>::infinity();
    return;
  }
  read(node, key, out, where);
}

std::vector<double> read_doubles(const YAML::Node& v, const std::string& where) {
  if (!v.IsSequence()) throw InvalidInput("config: '" + where + "' must be a list");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.IsScalar()) throw InvalidInput("config: non-numeric entry in '" + where + "'");
    const auto s = e.as<std::string>();
    if (s == "inf" || s == ".inf") {
      out.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    try {
      out.push_back(e.as<double>());
    } catch (const YAML::Exception&) {
      throw InvalidInput("config: non-numeric entry in '" + where + "'");
    }
  }
  return out;
}

ValueDist::Kind dist_kind(const std::string& s) {
  if (s == "constant") return ValueDist::Kind::Constant;
  if (s == "normal") return ValueDist::Kind::Normal;
  if (s == "uniform") return ValueDist::Kind::Uniform;
  throw InvalidInput("config: unknown value distribution '" + s + "'");
}

const char* dist_name(ValueDist::Kind k) {
  switch (k) {
    case ValueDist::Kind::Constant: return "constant";
    case ValueDist::Kind::Normal: return "normal";
    case ValueDist::Kind::Uniform: return "uniform";
  }
  return "constant";
}

void read_value_dist(const YAML::Node& n, ValueDist& v, const std::string& where) {
  if (!n) return;
  check_keys(n, where, {"dist", "a", "b"});
  std::string kind = dist_name(v.kind);
  read(n, "dist", kind, where);
  v.kind = dist_kind(kind);
  read_double(n, "a", v.a, where);
  read_double(n, "b", v.b, where);
}

void read_component(const YAML::Node& n, ComponentSpec& c, const std::string& where) {
  if (!n) return;
  check_keys(n, where, {"cluster", "unit", "center"});
  read_value_dist(n["cluster"], c.cluster, where + ".cluster");
  read_value_dist(n["unit"], c.unit, where + ".unit");
  read(n, "center", c.center_within_clusters, where);
}

Distribution::Kind law_kind(const std::string& s) {
  if (s == "point") return Distribution::Kind::PointMass;
  if (s == "two_point") return Distribution::Kind::TwoPoint;
  if (s == "beta") return Distribution::Kind::Beta;
  if (s == "table") return Distribution::Kind::QuantileTable;
  throw InvalidInput("config: unknown saturation law '" + s + "'");
}

const char* law_name(Distribution::Kind k) {
  switch (k) {
    case Distribution::Kind::PointMass: return "point";
    case Distribution::Kind::TwoPoint: return "two_point";
    case Distribution::Kind::Beta: return "beta";
    case Distribution::Kind::QuantileTable: return "table";
  }
  return "point";
}

void read_qp(const YAML::Node& n, QpOptions& q, const std::string& where) {
  read(n, "random_starts", q.random_starts, where);
  read(n, "vertex_cap", q.vertex_cap, where);
  read(n, "max_iter", q.max_iter, where);
  read_double(n, "tol", q.tol, where);
}

std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? ".inf" : "-.inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string list(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
  return s + "]";
}

std::string ilist(const std::vector<int>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
  return s + "]";
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw InvalidInput(std::string("config: YAML parse error: ") + e.what());
  }
  RunConfig cfg;
  if (!root || root.IsNull()) throw InvalidInput("config: empty document");
  check_keys(root, "root",
             {"version", "seed", "threads", "output", "graph", "outcomes", "design", "estimator", "analysis",
              "optimize", "replications", "limit", "var_shape", "deterministic"});
  read(root, "version", cfg.version, "root");
  if (cfg.version != kConfigVersion)
    throw InvalidInput("config: unsupported version " + std::to_string(cfg.version));
  if (!root["seed"]) throw InvalidInput("config: 'seed' is mandatory");
  read(root, "seed", cfg.seed, "root");
  read(root, "threads", cfg.threads, "root");
  read(root, "output", cfg.output, "root");
  read(root, "replications", cfg.replications, "root");
  read(root, "limit", cfg.limit, "root");

  if (const auto g = root["graph"]) {
    check_keys(g, "graph", {"source", "sizes", "block", "p_in", "p_out", "rate", "matrix", "edges", "membership"});
    read(g, "source", cfg.graph.source, "graph");
    read(g, "sizes", cfg.graph.sizes, "graph");
    read(g, "block", cfg.graph.block, "graph");
    read_double(g, "p_in", cfg.graph.p_in, "graph");
    read_double(g, "p_out", cfg.graph.p_out, "graph");
    read_double(g, "rate", cfg.graph.rate, "graph");
    if (g["matrix"]) {
      if (!g["matrix"].IsSequence()) throw InvalidInput("config: 'graph.matrix' must be a list of rows");
      for (const auto& row : g["matrix"]) cfg.graph.matrix.push_back(read_doubles(row, "graph.matrix"));
    }
    read(g, "edges", cfg.graph.edges, "graph");
    read(g, "membership", cfg.graph.membership, "graph");
  }
  if (const auto o = root["outcomes"]) {
    check_keys(o, "outcomes", {"source", "file", "alpha", "beta", "gamma"});
    read(o, "source", cfg.outcomes.source, "outcomes");
    read(o, "file", cfg.outcomes.file, "outcomes");
    read_component(o["alpha"], cfg.outcomes.spec.alpha, "outcomes.alpha");
    read_component(o["beta"], cfg.outcomes.spec.beta, "outcomes.beta");
    read_component(o["gamma"], cfg.outcomes.spec.gamma, "outcomes.gamma");
  }
  if (const auto d = root["design"]) {
    check_keys(d, "design", {"mode", "family", "mean", "lambda", "d", "fraction", "pi", "law"});
    read(d, "mode", cfg.design.mode, "design");
    read(d, "family", cfg.design.family, "design");
    read_double(d, "mean", cfg.design.mean, "design");
    read_double(d, "lambda", cfg.design.lambda, "design");
    read_double(d, "d", cfg.design.d, "design");
    read_double(d, "fraction", cfg.design.fraction, "design");
    if (d["pi"]) cfg.design.pi = read_doubles(d["pi"], "design.pi");
    if (const auto l = d["law"]) {
      check_keys(l, "design.law", {"kind", "a", "b", "p", "table"});
      std::string kind = law_name(cfg.design.dist.kind);
      read(l, "kind", kind, "design.law");
      cfg.design.dist.kind = law_kind(kind);
      read_double(l, "a", cfg.design.dist.a, "design.law");
      read_double(l, "b", cfg.design.dist.b, "design.law");
      read_double(l, "p", cfg.design.dist.p, "design.law");
      if (l["table"]) cfg.design.dist.table = read_doubles(l["table"], "design.law.table");
    }
  }
  if (const auto e = root["estimator"]) {
    check_keys(e, "estimator", {"kind", "weights"});
    read(e, "kind", cfg.estimator, "estimator");
    if (e["weights"]) cfg.weights = read_doubles(e["weights"], "estimator.weights");
  }
  if (const auto a = root["analysis"]) {
    check_keys(a, "analysis", {"tier", "pi", "eps2", "eps3"});
    read(a, "tier", cfg.analysis.tier, "analysis");
    if (a["pi"]) cfg.analysis.pi = read_doubles(a["pi"], "analysis.pi");
    read_double(a, "eps2", cfg.analysis.eps2, "analysis");
    read_double(a, "eps3", cfg.analysis.eps3, "analysis");
  }
  if (const auto p = root["optimize"]) {
    check_keys(p, "optimize", {"objective", "mean", "snap", "random_starts", "vertex_cap", "max_iter", "tol"});
    read(p, "objective", cfg.optimize.objective, "optimize");
    read_double(p, "mean", cfg.optimize.mean, "optimize");
    read(p, "snap", cfg.optimize.snap, "optimize");
    read_qp(p, cfg.optimize.qp, "optimize");
  }
  if (const auto v = root["var_shape"]) {
    check_keys(v, "var_shape", {"N", "M", "decay", "target_ratio", "realizations", "replications", "lambdas"});
    auto& c = cfg.var_shape;
    read(v, "N", c.N, "var_shape");
    read(v, "M", c.M, "var_shape");
    read_double(v, "decay", c.decay, "var_shape");
    read_double(v, "target_ratio", c.target_ratio, "var_shape");
    read(v, "realizations", c.realizations, "var_shape");
    read(v, "replications", c.replications, "var_shape");
    if (v["lambdas"]) c.lambdas = read_doubles(v["lambdas"], "var_shape.lambdas");
  }
  if (const auto v = root["deterministic"]) {
    check_keys(v, "deterministic",
               {"M", "cluster_size", "p_in", "alpha_lo", "alpha_hi", "alpha_noise_sd", "gamma_lo", "gamma_hi",
                "realizations", "replications", "random_starts", "vertex_cap", "max_iter", "tol"});
    auto& c = cfg.deterministic;
    read(v, "M", c.M, "deterministic");
    read(v, "cluster_size", c.cluster_size, "deterministic");
    read_double(v, "p_in", c.p_in, "deterministic");
    read_double(v, "alpha_lo", c.alpha_lo, "deterministic");
    read_double(v, "alpha_hi", c.alpha_hi, "deterministic");
    read_double(v, "alpha_noise_sd", c.alpha_noise_sd, "deterministic");
    read_double(v, "gamma_lo", c.gamma_lo, "deterministic");
    read_double(v, "gamma_hi", c.gamma_hi, "deterministic");
    read(v, "realizations", c.realizations, "deterministic");
    read(v, "replications", c.replications, "deterministic");
    read_qp(v, c.qp, "deterministic");
  }
  // The repro sections follow the top-level seed and thread count.
  cfg.var_shape.seed = cfg.seed;
  cfg.var_shape.threads = cfg.threads;
  cfg.deterministic.seed = cfg.seed;
  cfg.deterministic.threads = cfg.threads;
  cfg.optimize.qp.seed = cfg.seed;
  if (cfg.threads < 1) throw InvalidInput("config: threads must be >= 1");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c) {
  std::ostringstream o;
  auto comp = [&](const char* name, const ComponentSpec& s) {
    o << "  " << name << ":\n"
      << "    cluster: {dist: " << dist_name(s.cluster.kind) << ", a: " << num(s.cluster.a)
      << ", b: " << num(s.cluster.b) << "}\n"
      << "    unit: {dist: " << dist_name(s.unit.kind) << ", a: " << num(s.unit.a) << ", b: " << num(s.unit.b)
      << "}\n"
      << "    center: " << (s.center_within_clusters ? "true" : "false") << "\n";
  };
  auto qp = [&](const QpOptions& q) {
    o << "  random_starts: " << q.random_starts << "\n"
      << "  vertex_cap: " << q.vertex_cap << "\n"
      << "  max_iter: " << q.max_iter << "\n"
      << "  tol: " << num(q.tol) << "\n";
  };
  o << "version: " << c.version << "\n"
    << "seed: " << c.seed << "\n"
    << "threads: " << c.threads << "\n"
    << "output: " << quoted(c.output) << "\n"
    << "replications: " << c.replications << "\n"
    << "limit: " << c.limit << "\n";
  o << "graph:\n"
    << "  source: " << c.graph.source << "\n"
    << "  sizes: " << ilist(c.graph.sizes) << "\n"
    << "  block: " << c.graph.block << "\n"
    << "  p_in: " << num(c.graph.p_in) << "\n"
    << "  p_out: " << num(c.graph.p_out) << "\n"
    << "  rate: " << num(c.graph.rate) << "\n"
    << "  matrix: [";
  for (std::size_t r = 0; r < c.graph.matrix.size(); ++r) o << (r ? ", " : "") << list(c.graph.matrix[r]);
  o << "]\n"
    << "  edges: " << quoted(c.graph.edges) << "\n"
    << "  membership: " << quoted(c.graph.membership) << "\n";
  o << "outcomes:\n"
    << "  source: " << c.outcomes.source << "\n"
    << "  file: " << quoted(c.outcomes.file) << "\n";
  comp("alpha", c.outcomes.spec.alpha);
  comp("beta", c.outcomes.spec.beta);
  comp("gamma", c.outcomes.spec.gamma);
  o << "design:\n"
    << "  mode: " << c.design.mode << "\n"
    << "  family: " << c.design.family << "\n"
    << "  mean: " << num(c.design.mean) << "\n"
    << "  lambda: " << num(c.design.lambda) << "\n"
    << "  d: " << num(c.design.d) << "\n"
    << "  fraction: " << num(c.design.fraction) << "\n"
    << "  pi: " << list(c.design.pi) << "\n"
    << "  law: {kind: " << law_name(c.design.dist.kind) << ", a: " << num(c.design.dist.a)
    << ", b: " << num(c.design.dist.b) << ", p: " << num(c.design.dist.p)
    << ", table: " << list(c.design.dist.table) << "}\n";
  o << "estimator:\n"
    << "  kind: " << c.estimator << "\n"
    << "  weights: " << list(c.weights) << "\n";
  o << "analysis:\n"
    << "  tier: " << c.analysis.tier << "\n"
    << "  pi: " << list(c.analysis.pi) << "\n"
    << "  eps2: " << num(c.analysis.eps2) << "\n"
    << "  eps3: " << num(c.analysis.eps3) << "\n";
  o << "optimize:\n"
    << "  objective: " << c.optimize.objective << "\n"
    << "  mean: " << num(c.optimize.mean) << "\n"
    << "  snap: " << (c.optimize.snap ? "true" : "false") << "\n";
  qp(c.optimize.qp);
  const auto& v = c.var_shape;
  o << "var_shape:\n"
    << "  N: " << v.N << "\n"
    << "  M: " << v.M << "\n"
    << "  decay: " << num(v.decay) << "\n"
    << "  target_ratio: " << num(v.target_ratio) << "\n"
    << "  realizations: " << v.realizations << "\n"
    << "  replications: " << v.replications << "\n"
    << "  lambdas: " << list(v.lambdas.empty() ? default_lambda_grid() : v.lambdas) << "\n";
  const auto& d = c.deterministic;
  o << "deterministic:\n"
    << "  M: " << d.M << "\n"
    << "  cluster_size: " << d.cluster_size << "\n"
    << "  p_in: " << num(d.p_in) << "\n"
    << "  alpha_lo: " << num(d.alpha_lo) << "\n"
    << "  alpha_hi: " << num(d.alpha_hi) << "\n"
    << "  alpha_noise_sd: " << num(d.alpha_noise_sd) << "\n"
    << "  gamma_lo: " << num(d.gamma_lo) << "\n"
    << "  gamma_hi: " << num(d.gamma_hi) << "\n"
    << "  realizations: " << d.realizations << "\n"
    << "  replications: " << d.replications << "\n";
  qp(d.qp);
  return o.str();
}

std::string config_hash(const RunConfig& cfg) {
  // Thread count and output directory do not change results, so they stay
  // out of the hash.
  RunConfig norm = cfg;
  norm.threads = norm.var_shape.threads = norm.deterministic.threads = 1;
  norm.output.clear();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : dump_config(norm)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Design build_design(const DesignConfig& dc, const Clustering& c) {
  const int M = c.num_clusters();
  Design d;
  if (dc.mode == "independent")
    d.mode = DesignMode::Independent;
  else if (dc.mode == "permutation")
    d.mode = DesignMode::Permutation;
  else if (dc.mode == "deterministic")
    d.mode = DesignMode::Deterministic;
  else
    throw InvalidInput("config: unknown design mode '" + dc.mode + "'");
  if (d.mode == DesignMode::Independent) {
    d.dist = dc.dist;
  } else if (dc.family == "explicit") {
    d.pi = dc.pi;
  } else if (dc.family == "constant") {
    d.pi.assign(M, dc.mean);
  } else if (dc.family == "beta") {
    if (std::fabs(dc.mean - 0.5) > 1e-12) throw UnsupportedConfiguration("config: the beta family is centred at 1/2");
    d.pi = beta_quantile_pi(dc.lambda, M);
  } else if (dc.family == "two_point") {
    d.pi = two_point_pi(M, dc.mean, dc.d);
  } else if (dc.family == "three_point") {
    d.pi = three_point_pi(M, dc.mean, dc.fraction);
  } else {
    throw InvalidInput("config: unknown design family '" + dc.family + "'");
  }
  d.validate(M);
  return d;
}

EstimatorSpec build_estimator(const RunConfig& cfg) {
  EstimatorSpec e;
  if (cfg.estimator == "diff_in_means")
    e.kind = EstimatorKind::DiffInMeans;
  else if (cfg.estimator == "stratified")
    e.kind = EstimatorKind::Stratified;
  else
    throw InvalidInput("config: unknown estimator '" + cfg.estimator + "'");
  e.weights = cfg.weights;
  return e;
}

Eigen::MatrixXd build_block_matrix(const GraphConfig& g) {
  const int M = static_cast<int>(g.sizes.size());
  if (g.block == "decay") return decay_block_matrix(M, g.rate);
  if (g.block == "constant") {
    Eigen::MatrixXd A = Eigen::MatrixXd::Constant(M, M, g.p_out);
    A.diagonal().setConstant(g.p_in);
    return A;
  }
  if (g.block == "matrix") {
    if (static_cast<int>(g.matrix.size()) != M) throw InvalidInput("config: block matrix must be M x M");
    Eigen::MatrixXd A(M, M);
    for (int j = 0; j < M; ++j) {
      if (static_cast<int>(g.matrix[j].size()) != M) throw InvalidInput("config: block matrix must be M x M");
      for (int l = 0; l < M; ++l) A(j, l) = g.matrix[j][l];
    }
    return A;
  }
  throw InvalidInput("config: unknown block kind '" + g.block + "'");
}

}  // namespace satdesign
