#include "satdesign/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "satdesign/errors.hpp"

namespace satdesign {

std::string fmt_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw InvalidInput("csv: missing column '" + name + "'");
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw InvalidInput("csv: bad number '" + s + "' in " + what);
  return v;
}

int to_int(const std::string& s, const std::string& what) {
  int v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw InvalidInput("csv: bad integer '" + s + "' in " + what);
  return v;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("csv: cannot open '" + path + "'");
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("csv: '" + path + "' is empty");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto row = split(line);
    if (row.size() != t.header.size()) throw InvalidInput("csv: ragged row in '" + path + "'");
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string to_csv(const CsvTable& t) {
  std::string s;
  auto line = [&](const std::vector<std::string>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ',';
      s += v[i];
    }
    s += '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return s;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

void write_csv(const std::string& path, const CsvTable& t) { write_text(path, to_csv(t)); }

bool ensure_directory(const std::string& dir) {
  if (dir.empty() || std::filesystem::is_directory(dir)) return false;
  return std::filesystem::create_directories(dir);
}

CsvTable edges_table(const Graph& g) {
  CsvTable t{{"u", "v"}, {}};
  for (const auto& [i, k] : g.edge_list()) t.rows.push_back({std::to_string(i), std::to_string(k)});
  return t;
}

CsvTable membership_table(const Clustering& c) {
  CsvTable t{{"unit", "cluster"}, {}};
  for (int i = 0; i < c.num_units(); ++i) t.rows.push_back({std::to_string(i), std::to_string(c.cluster_of(i))});
  return t;
}

CsvTable outcomes_table(const LinearModel& m, const Clustering& c) {
  CsvTable t{{"unit", "cluster", "alpha", "beta", "gamma"}, {}};
  for (int i = 0; i < m.size(); ++i)
    t.rows.push_back({std::to_string(i), std::to_string(c.cluster_of(i)), fmt_double(m.alpha[i]),
                      fmt_double(m.beta[i]), fmt_double(m.gamma[i])});
  return t;
}

Graph graph_from_tables(const CsvTable& edges, int n) {
  const auto s = edges.column("u"), k = edges.column("v");
  std::vector<std::pair<int, int>> e;
  for (const auto& r : edges.rows) e.emplace_back(to_int(r[s], "edges"), to_int(r[k], "edges"));
  return Graph::from_edges(n, e);
}

Clustering clustering_from_table(const CsvTable& membership) {
  const auto u = membership.column("unit"), cc = membership.column("cluster");
  std::vector<int> of(membership.rows.size(), -1);
  for (const auto& r : membership.rows) {
    const int i = to_int(r[u], "membership");
    if (i < 0 || i >= static_cast<int>(of.size()) || of[i] != -1)
      throw InvalidInput("membership: units must be 0..N-1, each listed once");
    of[i] = to_int(r[cc], "membership");
  }
  return Clustering(of);
}

LinearModel model_from_table(const CsvTable& outcomes, int n) {
  const auto u = outcomes.column("unit"), a = outcomes.column("alpha"), b = outcomes.column("beta"),
             g = outcomes.column("gamma");
  if (static_cast<int>(outcomes.rows.size()) != n) throw InvalidInput("outcomes: expected one row per unit");
  LinearModel m;
  m.alpha.assign(n, NAN);
  m.beta.assign(n, NAN);
  m.gamma.assign(n, NAN);
  for (const auto& r : outcomes.rows) {
    const int i = to_int(r[u], "outcomes");
    if (i < 0 || i >= n || !std::isnan(m.alpha[i])) throw InvalidInput("outcomes: units must be 0..N-1, each once");
    m.alpha[i] = to_double(r[a], "outcomes");
    m.beta[i] = to_double(r[b], "outcomes");
    m.gamma[i] = to_double(r[g], "outcomes");
  }
  m.validate(n);
  return m;
}

CsvTable var_shape_table(const VarShapeResult& r) {
  CsvTable t{{"lambda", "mu2c", "rel_mean", "rel_se", "rel_q025", "rel_q975", "predicted_rel_mean"}, {}};
  for (const auto& p : r.points)
    t.rows.push_back({fmt_double(p.lambda), fmt_double(p.mu2c), fmt_double(p.rel_mean), fmt_double(p.rel_se),
                      fmt_double(p.rel_q025), fmt_double(p.rel_q975), fmt_double(p.predicted_rel_mean)});
  return t;
}

CsvTable var_shape_realizations_table(const VarShapeResult& r, const std::vector<double>& lambdas) {
  CsvTable t{{"realization", "lambda", "sigma_alpha", "variance", "relative"}, {}};
  for (std::size_t k = 0; k < r.variance.size(); ++k)
    for (std::size_t l = 0; l < lambdas.size(); ++l)
      t.rows.push_back({std::to_string(k), fmt_double(lambdas[l]), fmt_double(r.sigma_alpha[k]),
                        fmt_double(r.variance[k][l]), fmt_double(r.relative[k][l])});
  return t;
}

CsvTable deterministic_table(const DeterministicResult& r) {
  CsvTable t{{"realization", "design", "mean", "bias", "variance", "mse", "se_mean", "se_variance", "se_mse", "mu2c",
              "predicted_mse", "replications", "degenerate"},
             {}};
  for (const auto& x : r.runs)
    t.rows.push_back({std::to_string(x.realization), x.design, fmt_double(x.mc.mean), fmt_double(x.mc.bias),
                      fmt_double(x.mc.variance), fmt_double(x.mc.mse), fmt_double(x.mc.se_mean),
                      fmt_double(x.mc.se_variance), fmt_double(x.mc.se_mse), fmt_double(x.mu2c),
                      fmt_double(x.predicted_mse), std::to_string(x.mc.replications),
                      std::to_string(x.mc.degenerate)});
  return t;
}

CsvTable improvement_table(const DeterministicResult& r) {
  // Positive values mean the deterministic design is better.
  CsvTable t{{"realization", "baseline", "abs_bias_gain", "variance_gain", "mse_gain"}, {}};
  for (std::size_t i = 0; i + 2 < r.runs.size(); i += 3) {
    const auto& det = r.runs[i];
    for (std::size_t k = 1; k <= 2; ++k) {
      const auto& b = r.runs[i + k];
      t.rows.push_back({std::to_string(det.realization), b.design,
                        fmt_double(std::fabs(b.mc.bias) - std::fabs(det.mc.bias)),
                        fmt_double(b.mc.variance - det.mc.variance), fmt_double(b.mc.mse - det.mc.mse)});
    }
  }
  return t;
}

CsvTable pi_hat_table(const DeterministicResult& r) {
  CsvTable t{{"realization", "cluster", "pi"}, {}};
  for (std::size_t k = 0; k < r.pi_hat.size(); ++k)
    for (std::size_t j = 0; j < r.pi_hat[k].size(); ++j)
      t.rows.push_back({std::to_string(k), std::to_string(j), fmt_double(r.pi_hat[k][j])});
  return t;
}

}  // namespace satdesign
