#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "satdesign/analytics.hpp"
#include "satdesign/config.hpp"
#include "satdesign/errors.hpp"
#include "satdesign/io.hpp"
#include "satdesign/montecarlo.hpp"
#include "satdesign/optimize.hpp"
#include "satdesign/stats.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace satdesign;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
  std::optional<std::uint64_t> limit;
  bool print_config = false;
};

struct Instance {
  Clustering c;
  Graph g;
  LinearModel m;
};

// Relative paths in a config are taken relative to the config file.
std::string resolve(const std::string& path, const std::string& config_path) {
  if (path.empty() || fs::path(path).is_absolute() || config_path.empty()) return path;
  return (fs::path(config_path).parent_path() / path).string();
}

RunConfig load(const Options& o) {
  RunConfig cfg = o.config.empty() ? parse_config("seed: " + std::to_string(o.seed.value_or(1)) + "\n")
                                   : load_config(o.config);
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.var_shape.seed = cfg.deterministic.seed = cfg.optimize.qp.seed = *o.seed;
  }
  if (o.threads) {
    if (*o.threads < 1) throw InvalidInput("--threads must be >= 1");
    cfg.threads = cfg.var_shape.threads = cfg.deterministic.threads = *o.threads;
  }
  if (o.out) cfg.output = *o.out;
  if (o.limit) cfg.limit = *o.limit;
  if (!o.config.empty()) {
    cfg.graph.edges = resolve(cfg.graph.edges, o.config);
    cfg.graph.membership = resolve(cfg.graph.membership, o.config);
    cfg.outcomes.file = resolve(cfg.outcomes.file, o.config);
  }
  return cfg;
}

void prepare_output(const std::string& dir) {
  if (ensure_directory(dir)) std::cerr << "created output directory " << dir << "\n";
}

std::string out_path(const RunConfig& cfg, const std::string& name) { return (fs::path(cfg.output) / name).string(); }

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// Sidecar next to every command's outputs. Thread count is left out on
// purpose: outputs do not depend on it.
void write_sidecar(const RunConfig& cfg, const std::string& command, const std::vector<std::string>& files) {
  json j;
  j["command"] = command;
  j["config_version"] = cfg.version;
  j["config_hash"] = config_hash(cfg);
  j["seed"] = cfg.seed;
  j["outputs"] = files;
  write_json(out_path(cfg, command + ".run.json"), j);
}

Clustering load_clustering(const RunConfig& cfg) {
  if (cfg.graph.source == "files") return clustering_from_table(read_csv(cfg.graph.membership));
  if (cfg.graph.source != "sbm") throw InvalidInput("graph.source must be sbm or files");
  return Clustering::from_sizes(cfg.graph.sizes);
}

Graph load_graph(const RunConfig& cfg, const Clustering& c) {
  if (cfg.graph.source == "files") return graph_from_tables(read_csv(cfg.graph.edges), c.num_units());
  return sbm_generate(c, build_block_matrix(cfg.graph), cfg.seed);
}

LinearModel load_model(const RunConfig& cfg, const Clustering& c) {
  if (cfg.outcomes.source == "file") return model_from_table(read_csv(cfg.outcomes.file), c.num_units());
  if (cfg.outcomes.source != "spec") throw InvalidInput("outcomes.source must be spec or file");
  return generate_outcomes(cfg.outcomes.spec, c, cfg.seed);
}

Instance load_instance(const RunConfig& cfg) {
  Instance in;
  in.c = load_clustering(cfg);
  in.g = load_graph(cfg, in.c);
  in.m = load_model(cfg, in.c);
  in.m.validate(in.c.num_units());
  return in;
}

json to_json(const Eigen::MatrixXd& a) {
  json rows = json::array();
  for (int r = 0; r < a.rows(); ++r) {
    json row = json::array();
    for (int k = 0; k < a.cols(); ++k) row.push_back(a(r, k));
    rows.push_back(row);
  }
  return rows;
}

json to_json(const VarianceCoefficients& v) {
  return {{"V0", v.V0}, {"V1", v.V1}, {"V2", v.V2}, {"V3", v.V3}, {"V4", v.V4}};
}

json to_json(const MseParts& p) {
  return {{"expectation", p.expectation}, {"bias", p.bias}, {"variance", p.variance}, {"mse", p.mse}};
}

json to_json(const McSummary& s) {
  return {{"mean", s.mean},       {"bias", s.bias},       {"variance", s.variance},
          {"mse", s.mse},         {"se_mean", s.se_mean}, {"se_variance", s.se_variance},
          {"se_mse", s.se_mse},   {"tte", s.tte},         {"replications", s.replications},
          {"degenerate", s.degenerate}, {"seed", s.seed}};
}

double mean_of(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / x.size(); }

int treated_total(const std::vector<double>& pi, const Clustering& c) {
  const auto n = treated_counts(pi, c);
  return std::accumulate(n.begin(), n.end(), 0);
}

// ---- commands -----------------------------------------------------------------

int cmd_gen_graph(const RunConfig& cfg) {
  if (cfg.graph.source != "sbm") throw InvalidInput("gen-graph needs graph.source = sbm");
  const Clustering c = load_clustering(cfg);
  const Graph g = load_graph(cfg, c);
  prepare_output(cfg.output);
  write_csv(out_path(cfg, "edges.csv"), edges_table(g));
  write_csv(out_path(cfg, "membership.csv"), membership_table(c));
  write_sidecar(cfg, "gen-graph", {"edges.csv", "membership.csv"});
  std::cout << "nodes " << g.num_nodes() << " edges " << g.num_edges() << "\n";
  return 0;
}

int cmd_gen_outcomes(const RunConfig& cfg) {
  if (cfg.outcomes.source != "spec") throw InvalidInput("gen-outcomes needs outcomes.source = spec");
  const Clustering c = load_clustering(cfg);
  const LinearModel m = load_model(cfg, c);
  prepare_output(cfg.output);
  write_csv(out_path(cfg, "outcomes.csv"), outcomes_table(m, c));
  write_sidecar(cfg, "gen-outcomes", {"outcomes.csv"});
  std::cout << "units " << m.size() << " tte " << fmt_double(total_treatment_effect(m)) << "\n";
  return 0;
}

int cmd_analyze(const RunConfig& cfg) {
  const Instance in = load_instance(cfg);
  const int N = in.c.num_units(), M = in.c.num_clusters();
  json warnings = json::array();
  const auto stats = graph_stats(in.g, in.c);
  const double gp = gamma_prime(in.g, in.c, in.m.gamma);
  const double gbar = mean_of(in.m.gamma);
  const bool sutva = in.m.sutva();

  std::vector<double> pi = cfg.analysis.pi;
  if (pi.empty() && cfg.design.mode != "independent") pi = build_design(cfg.design, in.c).pi;
  const int n_t = pi.empty() ? static_cast<int>(std::lround(cfg.design.mean * N)) : treated_total(pi, in.c);

  json r;
  r["N"] = N;
  r["M"] = M;
  r["sizes"] = in.c.sizes();
  r["edges"] = in.g.num_edges();
  r["tier"] = sutva ? "sutva" : "interference";
  r["tte"] = total_treatment_effect(in.m);
  r["gamma_bar"] = gbar;
  r["gamma_prime"] = gp;
  r["perfect_clustering"] = is_perfect_clustering(in.g, in.c);
  r["block_fixed_gamma"] = block_fixed_gamma(in.m, in.c);
  r["n_t"] = n_t;
  r["graph"] = {{"P", to_json(stats.P)},
                {"Q", to_json(stats.Q)},
                {"undefined_q_rows", stats.undefined_q_rows},
                {"min_degree", stats.min_degree},
                {"max_degree", stats.max_degree},
                {"isolated", stats.isolated}};

  try {
    const auto br = interference_regime(gbar, gp, M);
    r["bias_regime"] = regime_name(br.regime);
    r["bias_regime_bias"] = br.bias;
  } catch (const ConstraintError& e) {
    warnings.push_back(std::string("bias_regime: ") + e.what());
  }
  if (sutva) {
    try {
      r["sutva_regime"] = regime_name(sutva_regime(sutva_outcomes(in.m), in.c, n_t));
    } catch (const Error& e) {
      warnings.push_back(std::string("sutva_regime: ") + e.what());
    }
  }

  const auto t = exposure_tensors(in.m, in.g, in.c);
  const bool want_full = cfg.analysis.tier != "simplified";
  const bool want_simple = cfg.analysis.tier != "full";
  if (want_full) {
    try {
      r["variance_full"] = to_json(variance_coefficients_full(in.m, t, in.c, n_t));
    } catch (const Error& e) {
      warnings.push_back(std::string("variance_full: ") + e.what());
    }
  }
  if (want_simple) {
    try {
      r["variance_simplified"] = to_json(variance_coefficients_simplified(in.m, stats, in.c, n_t));
    } catch (const Error& e) {
      warnings.push_back(std::string("variance_simplified: ") + e.what());
    }
  }

  const double eps2 = cfg.analysis.eps2 > 0.0 ? cfg.analysis.eps2 : 0.5 * stats.P.rowwise().sum().minCoeff();
  const auto ar = check_assumptions(in.g, in.c, stats, eps2, cfg.analysis.eps3);
  r["assumptions"] = {{"eps2", eps2},
                      {"eps3", cfg.analysis.eps3},
                      {"dense_threshold", ar.dense_threshold},
                      {"dense_ok", ar.dense_ok},
                      {"edge_prob_max_ratio", ar.edge_prob_max_ratio},
                      {"edge_prob_ok", ar.edge_prob_ok}};
  if (!ar.dense_ok) warnings.push_back("assumption: dense-graph degree bound fails");
  if (!ar.edge_prob_ok) warnings.push_back("assumption: edge-probability concentration fails");

  if (!pi.empty()) {
    json cond;
    cond["pi"] = pi;
    const auto mom = design_moments(pi);
    cond["mean"] = mom.mean;
    cond["mu2c"] = mom.mu2c;
    try {
      if (!integer_consistent(pi, in.c)) {
        warnings.push_back("conditional: pi is not integer consistent; relaxed values reported");
        cond["relaxed"] = true;
        cond["values"] = to_json(relaxed_cond_mse_interference(in.m, t, in.c, pi));
      } else {
        cond["relaxed"] = false;
        cond["values"] = to_json(cond_mse_interference(in.m, t, in.c, pi));
      }
      cond["marginal_expectation_approx"] = marginal_expectation_approx(in.m, in.g, in.c, n_t, mom.mu2c);
      if (in.c.equal_sizes() && integer_consistent(pi, in.c))
        cond["marginal_expectation_exact"] = marginal_expectation_exact(in.m, t, in.c, n_t, mom.mu2c);
    } catch (const Error& e) {
      warnings.push_back(std::string("conditional: ") + e.what());
    }
    r["conditional"] = cond;
  }
  r["warnings"] = warnings;

  prepare_output(cfg.output);
  write_json(out_path(cfg, "analysis.json"), r);
  write_sidecar(cfg, "analyze", {"analysis.json"});
  for (const auto& w : warnings) std::cerr << "warning: " << w.get<std::string>() << "\n";
  std::cout << "tier " << r["tier"].get<std::string>() << " gamma_prime " << fmt_double(gp) << "\n";
  return 0;
}

// Case tag for the symmetric-family optimum.
std::string family_case(const FamilyOptimum& f, double mean) {
  const double h = std::min(mean, 1.0 - mean);
  if (f.d == 0.0) return "stratified";
  if (f.kind == FamilyKind::ThreePoint) return "three_point";
  if (std::abs(f.d - h) < 1e-12) return "two_point_extreme";
  return "two_point_interior";
}

int cmd_optimize(const RunConfig& cfg) {
  const Instance in = load_instance(cfg);
  const int N = in.c.num_units(), M = in.c.num_clusters();
  const double mean = cfg.optimize.mean;
  const int n_t = static_cast<int>(std::lround(mean * N));
  json r;
  r["objective"] = cfg.optimize.objective;
  r["mean"] = mean;
  r["n_t"] = n_t;
  std::vector<double> pi_star;
  std::string tag;
  const auto t = exposure_tensors(in.m, in.g, in.c);

  if (cfg.optimize.objective == "family" || cfg.optimize.objective == "beta") {
    const auto v = variance_coefficients_full(in.m, t, in.c, n_t);
    r["variance"] = to_json(v);
    if (cfg.optimize.objective == "family") {
      const auto f = symmetric_family_optimum(v, M, mean);
      tag = family_case(f, mean);
      pi_star = f.pi_star;
      r["family"] = f.kind == FamilyKind::TwoPoint ? "two_point" : "three_point";
      r["d"] = f.d;
      r["fraction"] = f.fraction;
      r["family_value"] = f.family_value;
      r["value"] = f.objective_value;
    } else {
      const auto b = beta_shape_search(v, M);
      pi_star = beta_quantile_pi(b.lambda_star, M);
      tag = std::isinf(b.lambda_star) ? "stratified" : (b.lambda_star == 0.0 ? "cluster_based" : "beta_interior");
      r["lambda_star"] = b.lambda_star;
      r["value"] = b.objective;
      r["grid"] = b.grid;
      r["grid_values"] = b.values;
    }
  } else if (cfg.optimize.objective == "sutva-mse" || cfg.optimize.objective == "interference-mse") {
    QpResult q;
    SmoothObjective f;
    if (cfg.optimize.objective == "sutva-mse") {
      const auto form = sutva_mse_form(sutva_outcomes(in.m), in.c, n_t);
      q = deterministic_qp(form, mean, cfg.optimize.qp);
      f = as_smooth(form);
    } else {
      f = is_perfect_clustering(in.g, in.c) ? perfect_clustering_objective(in.m, t, in.g, in.c, n_t)
                                            : relaxed_mse_objective(in.m, t, in.c);
      q = minimize_design(f, M, mean, cfg.optimize.qp);
    }
    pi_star.assign(q.pi.data(), q.pi.data() + q.pi.size());
    r["relaxed_value"] = q.objective;
    r["stratified_value"] = q.stratified_objective;
    r["best_vertex_value"] = q.best_vertex_objective;
    r["converged"] = q.converged;
    r["starts"] = q.starts;
    const bool vertex = std::all_of(pi_star.begin(), pi_star.end(),
                                    [](double p) { return std::min(p, 1.0 - p) < 1e-9; });
    tag = vertex ? "vertex" : "interior";
    if (cfg.optimize.snap) {
      pi_star = snap_to_counts(f, q.pi, in.c.sizes());
      r["snapped"] = true;
    }
    r["value"] = f.value(Eigen::Map<const Eigen::VectorXd>(pi_star.data(), M));
  } else {
    throw InvalidInput("optimize.objective must be family, beta, sutva-mse or interference-mse");
  }
  r["case"] = tag;
  r["pi_star"] = pi_star;

  prepare_output(cfg.output);
  write_json(out_path(cfg, "optimize.json"), r);
  CsvTable tab;
  tab.header = {"cluster", "pi"};
  for (int j = 0; j < M; ++j) tab.rows.push_back({std::to_string(j), fmt_double(pi_star[j])});
  write_csv(out_path(cfg, "pi_star.csv"), tab);
  write_sidecar(cfg, "optimize", {"optimize.json", "pi_star.csv"});
  std::cout << "case " << tag << "\npi_star";
  for (double p : pi_star) std::cout << " " << fmt_double(p);
  std::cout << "\n";
  return 0;
}

int cmd_simulate(const RunConfig& cfg) {
  const Instance in = load_instance(cfg);
  const Design d = build_design(cfg.design, in.c);
  std::vector<double> draws;
  const auto s = replicate(d, in.c, in.g, in.m, build_estimator(cfg), cfg.replications, cfg.seed, cfg.threads, &draws);
  prepare_output(cfg.output);
  write_json(out_path(cfg, "simulate.json"), to_json(s));
  CsvTable tab;
  tab.header = {"replication", "estimate"};
  for (std::size_t r = 0; r < draws.size(); ++r) tab.rows.push_back({std::to_string(r), fmt_double(draws[r])});
  write_csv(out_path(cfg, "draws.csv"), tab);
  write_sidecar(cfg, "simulate", {"simulate.json", "draws.csv"});
  std::cout << "mean " << fmt_double(s.mean) << " variance " << fmt_double(s.variance) << " mse " << fmt_double(s.mse)
            << "\n";
  return 0;
}

int cmd_enumerate(const RunConfig& cfg) {
  const Instance in = load_instance(cfg);
  const Design d = build_design(cfg.design, in.c);
  const auto e = enumerate_exact(d, in.c, in.g, in.m, build_estimator(cfg), cfg.limit);
  json r{{"mean", e.mean},
         {"variance", e.variance},
         {"mse", e.mse},
         {"tte", e.tte},
         {"assignments", e.assignments},
         {"saturation_vectors", e.saturation_vectors},
         {"excluded", e.excluded}};
  prepare_output(cfg.output);
  write_json(out_path(cfg, "enumerate.json"), r);
  write_sidecar(cfg, "enumerate", {"enumerate.json"});
  std::cout << "assignments " << e.assignments << " mean " << fmt_double(e.mean) << " variance "
            << fmt_double(e.variance) << "\n";
  return 0;
}

int cmd_fig_var_shape(const RunConfig& cfg) {
  const auto res = reproduce_var_shape(cfg.var_shape);
  const auto lambdas = cfg.var_shape.lambdas.empty() ? default_lambda_grid() : cfg.var_shape.lambdas;
  prepare_output(cfg.output);
  write_csv(out_path(cfg, "var_shape.csv"), var_shape_table(res));
  write_csv(out_path(cfg, "var_shape_realizations.csv"), var_shape_realizations_table(res, lambdas));
  write_sidecar(cfg, "fig-var-shape", {"var_shape.csv", "var_shape_realizations.csv"});
  const auto best = std::min_element(res.points.begin(), res.points.end(),
                                     [](const auto& a, const auto& b) { return a.rel_mean < b.rel_mean; });
  std::cout << "minimum " << fmt_double(best->rel_mean) << "% at lambda " << fmt_double(best->lambda) << "\n";
  return 0;
}

int cmd_fig_deterministic(const RunConfig& cfg) {
  const auto res = reproduce_deterministic_comparison(cfg.deterministic);
  prepare_output(cfg.output);
  write_csv(out_path(cfg, "deterministic.csv"), deterministic_table(res));
  write_csv(out_path(cfg, "improvement.csv"), improvement_table(res));
  write_csv(out_path(cfg, "pi_hat.csv"), pi_hat_table(res));
  write_sidecar(cfg, "fig-deterministic", {"deterministic.csv", "improvement.csv", "pi_hat.csv"});
  std::cout << "realizations " << res.pi_hat.size() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Saturation design analysis, optimization and simulation"};
  app.require_subcommand(1);
  Options opt;
  auto common = [&opt](CLI::App* s) {
    s->add_option("-c,--config", opt.config, "YAML config file");
    s->add_option("--seed", opt.seed, "override the config seed");
    s->add_option("--threads", opt.threads, "worker threads");
    s->add_option("-o,--out", opt.out, "output directory");
    s->add_option("--limit", opt.limit, "enumeration limit");
    s->add_flag("--print-config", opt.print_config, "print the resolved config with all defaults and exit");
  };
  std::string command;
  auto add = [&](const std::string& name, const std::string& help) {
    CLI::App* s = app.add_subcommand(name, help);
    common(s);
    s->callback([&command, name] { command = name; });
    return s;
  };
  add("gen-graph", "draw an SBM graph; writes edges.csv and membership.csv");
  add("gen-outcomes", "draw outcome coefficients; writes outcomes.csv");
  add("analyze", "bias and variance analysis; writes analysis.json");
  add("optimize", "optimal saturation vector; writes optimize.json and pi_star.csv");
  add("simulate", "Monte Carlo replications of a design; writes simulate.json and draws.csv");
  add("enumerate", "exact law of the estimator by enumeration; writes enumerate.json");
  CLI::App* repro = app.add_subcommand("repro", "reproduce the simulation studies");
  repro->require_subcommand(1);
  for (const auto& [name, help] : std::vector<std::pair<std::string, std::string>>{
           {"fig-var-shape", "variance against the Beta shape parameter"},
           {"fig-deterministic", "deterministic vs randomized vs re-randomized designs"}}) {
    CLI::App* s = repro->add_subcommand(name, help);
    common(s);
    s->callback([&command, name = name] { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const RunConfig cfg = load(opt);
    if (opt.print_config) {
      std::cout << dump_config(cfg);
      return 0;
    }
    if (command == "gen-graph") return cmd_gen_graph(cfg);
    if (command == "gen-outcomes") return cmd_gen_outcomes(cfg);
    if (command == "analyze") return cmd_analyze(cfg);
    if (command == "optimize") return cmd_optimize(cfg);
    if (command == "simulate") return cmd_simulate(cfg);
    if (command == "enumerate") return cmd_enumerate(cfg);
    if (command == "fig-var-shape") return cmd_fig_var_shape(cfg);
    if (command == "fig-deterministic") return cmd_fig_deterministic(cfg);
    std::cerr << "error: unknown command\n";
    return 1;
  } catch (const ConstraintError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
