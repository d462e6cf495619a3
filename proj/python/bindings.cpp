#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <numeric>

#include "satdesign/analytics.hpp"
#include "satdesign/config.hpp"
#include "satdesign/designs.hpp"
#include "satdesign/errors.hpp"
#include "satdesign/estimators.hpp"
#include "satdesign/graph.hpp"
#include "satdesign/io.hpp"
#include "satdesign/montecarlo.hpp"
#include "satdesign/optimize.hpp"
#include "satdesign/outcomes.hpp"
#include "satdesign/stats.hpp"

namespace py = pybind11;
using namespace satdesign;

namespace {

py::dict as_dict(const VarianceCoefficients& v) {
  py::dict d;
  d["V0"] = v.V0;
  d["V1"] = v.V1;
  d["V2"] = v.V2;
  d["V3"] = v.V3;
  d["V4"] = v.V4;
  return d;
}

VarianceCoefficients coefficients_from(const py::dict& d) {
  VarianceCoefficients v;
  auto get = [&](const char* k) { return d.contains(k) ? d[k].cast<double>() : 0.0; };
  v.V0 = get("V0");
  v.V1 = get("V1");
  v.V2 = get("V2");
  v.V3 = get("V3");
  v.V4 = get("V4");
  return v;
}

py::dict as_dict(const MseParts& p) {
  py::dict d;
  d["expectation"] = p.expectation;
  d["bias"] = p.bias;
  d["variance"] = p.variance;
  d["mse"] = p.mse;
  return d;
}

py::dict as_dict(const McSummary& s) {
  py::dict d;
  d["mean"] = s.mean;
  d["bias"] = s.bias;
  d["variance"] = s.variance;
  d["mse"] = s.mse;
  d["se_mean"] = s.se_mean;
  d["se_variance"] = s.se_variance;
  d["se_mse"] = s.se_mse;
  d["tte"] = s.tte;
  d["replications"] = s.replications;
  d["degenerate"] = s.degenerate;
  d["seed"] = s.seed;
  return d;
}

Design make_design(const std::string& mode, const std::vector<double>& pi) {
  Design d;
  if (mode == "deterministic")
    d.mode = DesignMode::Deterministic;
  else if (mode == "permutation")
    d.mode = DesignMode::Permutation;
  else
    throw InvalidInput("mode must be deterministic or permutation; use independent_design for i.i.d. laws");
  d.pi = pi;
  return d;
}

EstimatorSpec make_estimator(const std::string& kind, const std::vector<double>& weights) {
  EstimatorSpec e;
  if (kind == "stratified")
    e.kind = EstimatorKind::Stratified;
  else if (kind != "diff_in_means")
    throw InvalidInput("estimator must be diff_in_means or stratified");
  e.weights = weights;
  return e;
}

int treated_total(const std::vector<double>& pi, const Clustering& c) {
  const auto n = exact_treated_counts(pi, c);
  return std::accumulate(n.begin(), n.end(), 0);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Saturation designs for clustered experiments with interference";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidInput>(m, "InvalidInput", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ConsistencyError>(m, "ConsistencyError", base.ptr());
  py::register_exception<DegenerateAssignment>(m, "DegenerateAssignment", base.ptr());
  auto constraint = py::register_exception<ConstraintError>(m, "ConstraintError", base.ptr());
  py::register_exception<UnsupportedConfiguration>(m, "UnsupportedConfiguration", constraint.ptr());
  py::register_exception<ModelMismatch>(m, "ModelMismatch", constraint.ptr());
  py::register_exception<TooLarge>(m, "TooLarge", constraint.ptr());
  py::register_exception<AssumptionViolation>(m, "AssumptionViolation", constraint.ptr());

  py::class_<Graph>(m, "Graph")
      .def(py::init(&Graph::from_edges), py::arg("n"), py::arg("edges"))
      .def_property_readonly("num_nodes", &Graph::num_nodes)
      .def_property_readonly("num_edges", &Graph::num_edges)
      .def("degree", &Graph::degree)
      .def("neighbors", [](const Graph& g, int i) {
        const auto s = g.neighbors(i);
        return std::vector<int>(s.begin(), s.end());
      })
      .def("edges", &Graph::edge_list);

  py::class_<Clustering>(m, "Clustering")
      .def(py::init<std::vector<int>>(), py::arg("cluster_of"))
      .def_static("from_sizes", &Clustering::from_sizes)
      .def_property_readonly("num_units", &Clustering::num_units)
      .def_property_readonly("num_clusters", &Clustering::num_clusters)
      .def_property_readonly("sizes", &Clustering::sizes)
      .def_property_readonly("assignment", &Clustering::assignment)
      .def("members", &Clustering::members);

  py::class_<LinearModel>(m, "LinearModel")
      .def(py::init([](std::vector<double> a, std::vector<double> b, std::vector<double> g) {
             LinearModel lm{std::move(a), std::move(b), std::move(g)};
             lm.validate(lm.size());
             return lm;
           }),
           py::arg("alpha"), py::arg("beta"), py::arg("gamma"))
      .def_readonly("alpha", &LinearModel::alpha)
      .def_readonly("beta", &LinearModel::beta)
      .def_readonly("gamma", &LinearModel::gamma)
      .def_property_readonly("sutva", &LinearModel::sutva)
      .def("evaluate", [](const LinearModel& lm, const Graph& g, const std::vector<std::uint8_t>& z) {
        return evaluate(lm, g, z);
      });

  m.def("total_treatment_effect", py::overload_cast<const LinearModel&>(&total_treatment_effect));

  // graph
  m.def("sbm_generate", &sbm_generate, py::arg("clustering"), py::arg("A"), py::arg("seed"));
  m.def("decay_block_matrix", &decay_block_matrix, py::arg("M"), py::arg("rate"));
  m.def("gamma_prime", [](const Graph& g, const Clustering& c, const std::vector<double>& gamma) {
    return gamma_prime(g, c, gamma);
  });
  m.def("is_perfect_clustering", &is_perfect_clustering);
  m.def("graph_stats", [](const Graph& g, const Clustering& c) {
    const auto s = graph_stats(g, c);
    py::dict d;
    d["P"] = s.P;
    d["Q"] = s.Q;
    d["undefined_q_rows"] = s.undefined_q_rows;
    d["min_degree"] = s.min_degree;
    d["max_degree"] = s.max_degree;
    d["isolated"] = s.isolated;
    return d;
  });

  // designs
  m.def("beta_quantile_pi", &beta_quantile_pi, py::arg("lam"), py::arg("M"));
  m.def("two_point_pi", &two_point_pi, py::arg("M"), py::arg("mean"), py::arg("d"));
  m.def("three_point_pi", &three_point_pi, py::arg("M"), py::arg("mean"), py::arg("fraction"));
  m.def("design_moments", [](const std::vector<double>& pi) {
    const auto mo = design_moments(pi);
    py::dict d;
    d["mean"] = mo.mean;
    d["mu2c"] = mo.mu2c;
    d["mu3c"] = mo.mu3c;
    d["mu4c"] = mo.mu4c;
    return d;
  });
  m.def(
      "sample_assignment",
      [](const std::string& mode, const std::vector<double>& pi, const Clustering& c, std::uint64_t seed,
         std::uint64_t rep) { return sample_assignment(make_design(mode, pi), c, seed, rep).z; },
      py::arg("mode"), py::arg("pi"), py::arg("clustering"), py::arg("seed"), py::arg("rep") = 0);

  // estimators
  m.def("diff_in_means", [](const std::vector<double>& y, const std::vector<std::uint8_t>& z) {
    return diff_in_means(y, z);
  });
  m.def(
      "stratified_estimate",
      [](const std::vector<double>& y, const std::vector<std::uint8_t>& z, const Clustering& c,
         const std::vector<double>& w) { return stratified_estimate(y, z, c, w); },
      py::arg("y"), py::arg("z"), py::arg("clustering"), py::arg("weights") = std::vector<double>{});

  // analytics
  m.def(
      "conditional_mse",
      [](const LinearModel& lm, const Graph& g, const Clustering& c, const std::vector<double>& pi) {
        return as_dict(cond_mse_interference(lm, exposure_tensors(lm, g, c), c, pi));
      },
      py::arg("model"), py::arg("graph"), py::arg("clustering"), py::arg("pi"));
  m.def(
      "variance_coefficients",
      [](const LinearModel& lm, const Graph& g, const Clustering& c, int n_t, const std::string& tier) {
        if (tier == "full") return as_dict(variance_coefficients_full(lm, exposure_tensors(lm, g, c), c, n_t));
        if (tier == "simplified") return as_dict(variance_coefficients_simplified(lm, graph_stats(g, c), c, n_t));
        throw InvalidInput("tier must be full or simplified");
      },
      py::arg("model"), py::arg("graph"), py::arg("clustering"), py::arg("n_t"), py::arg("tier") = "full");
  m.def(
      "variance_from_moments",
      [](const py::dict& v, const std::vector<double>& pi) {
        return variance_from_moments(coefficients_from(v), design_moments(pi));
      },
      py::arg("coefficients"), py::arg("pi"));
  m.def(
      "marginal_expectation",
      [](const LinearModel& lm, const Graph& g, const Clustering& c, const std::vector<double>& pi, bool exact) {
        const int nt = treated_total(pi, c);
        const double mu2c = design_moments(pi).mu2c;
        return exact ? marginal_expectation_exact(lm, exposure_tensors(lm, g, c), c, nt, mu2c)
                     : marginal_expectation_approx(lm, g, c, nt, mu2c);
      },
      py::arg("model"), py::arg("graph"), py::arg("clustering"), py::arg("pi"), py::arg("exact") = true);
  m.def("interference_regime", [](double gamma_bar, double gamma_prime, int M) {
    const auto r = interference_regime(gamma_bar, gamma_prime, M);
    return py::make_tuple(regime_name(r.regime), r.bias);
  });

  // optimize
  m.def(
      "symmetric_family_optimum",
      [](const py::dict& v, int M, double mean) {
        const auto f = symmetric_family_optimum(coefficients_from(v), M, mean);
        py::dict d;
        d["family"] = f.kind == FamilyKind::TwoPoint ? "two_point" : "three_point";
        d["d"] = f.d;
        d["fraction"] = f.fraction;
        d["family_value"] = f.family_value;
        d["pi_star"] = f.pi_star;
        d["value"] = f.objective_value;
        return d;
      },
      py::arg("coefficients"), py::arg("M"), py::arg("mean") = 0.5);
  m.def(
      "beta_shape_search",
      [](const py::dict& v, int M) {
        const auto b = beta_shape_search(coefficients_from(v), M);
        return py::make_tuple(b.lambda_star, b.objective);
      },
      py::arg("coefficients"), py::arg("M"));
  m.def(
      "deterministic_qp",
      [](const Eigen::MatrixXd& Q, const Eigen::VectorXd& c, double mean) {
        QuadraticForm q;
        q.Q = Q;
        q.c = c;
        const auto r = deterministic_qp(q, mean);
        return py::make_tuple(r.pi, r.objective);
      },
      py::arg("Q"), py::arg("c"), py::arg("mean"));
  m.def("project_capped_simplex", &project_capped_simplex, py::arg("y"), py::arg("total"));

  // montecarlo
  m.def(
      "enumerate_exact",
      [](const std::string& mode, const std::vector<double>& pi, const Clustering& c, const Graph& g,
         const LinearModel& lm, const std::string& estimator, std::uint64_t limit) {
        const auto r = enumerate_exact(make_design(mode, pi), c, g, lm, make_estimator(estimator, {}), limit);
        py::dict d;
        d["mean"] = r.mean;
        d["variance"] = r.variance;
        d["mse"] = r.mse;
        d["tte"] = r.tte;
        d["assignments"] = r.assignments;
        return d;
      },
      py::arg("mode"), py::arg("pi"), py::arg("clustering"), py::arg("graph"), py::arg("model"),
      py::arg("estimator") = "diff_in_means", py::arg("limit") = 10'000'000);
  m.def(
      "replicate",
      [](const std::string& mode, const std::vector<double>& pi, const Clustering& c, const Graph& g,
         const LinearModel& lm, int R, std::uint64_t seed, int threads, const std::string& estimator) {
        McSummary s;
        {
          py::gil_scoped_release release;
          s = replicate(make_design(mode, pi), c, g, lm, make_estimator(estimator, {}), R, seed, threads);
        }
        return as_dict(s);
      },
      py::arg("mode"), py::arg("pi"), py::arg("clustering"), py::arg("graph"), py::arg("model"),
      py::arg("replications"), py::arg("seed"), py::arg("threads") = 1, py::arg("estimator") = "diff_in_means");

  // configs; graph and outcomes are drawn exactly as the CLI draws them
  m.def(
      "instance_from_config",
      [](const std::string& yaml) {
        const auto cfg = parse_config(yaml);
        if (cfg.graph.source != "sbm" || cfg.outcomes.source != "spec")
          throw UnsupportedConfiguration("instance_from_config needs graph.source sbm and outcomes.source spec");
        auto c = Clustering::from_sizes(cfg.graph.sizes);
        auto g = sbm_generate(c, build_block_matrix(cfg.graph), cfg.seed);
        auto lm = generate_outcomes(cfg.outcomes.spec, c, cfg.seed);
        return py::make_tuple(g, c, lm);
      },
      py::arg("config_yaml"));
  m.def("dump_config", [](const std::string& yaml) { return dump_config(parse_config(yaml)); });
  m.def("config_hash", [](const std::string& yaml) { return config_hash(parse_config(yaml)); });
  m.def(
      "reproduce_var_shape_csv",
      [](const std::string& yaml) {
        const auto cfg = parse_config(yaml);
        VarShapeResult r;
        {
          py::gil_scoped_release release;
          r = reproduce_var_shape(cfg.var_shape);
        }
        return to_csv(var_shape_table(r));
      },
      py::arg("config_yaml"));
  m.def(
      "reproduce_deterministic_csv",
      [](const std::string& yaml) {
        const auto cfg = parse_config(yaml);
        DeterministicResult r;
        {
          py::gil_scoped_release release;
          r = reproduce_deterministic_comparison(cfg.deterministic);
        }
        return to_csv(deterministic_table(r));
      },
      py::arg("config_yaml"));
}
