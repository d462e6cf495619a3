#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "satdesign/graph.hpp"
#include "satdesign/montecarlo.hpp"
#include "satdesign/outcomes.hpp"

namespace satdesign {

// Shortest round-tripping decimal; "inf", "-inf", "nan" for non-finite values.
std::string fmt_double(double x);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& t);
std::string to_csv(const CsvTable& t);

CsvTable edges_table(const Graph& g);
CsvTable membership_table(const Clustering& c);
CsvTable outcomes_table(const LinearModel& m, const Clustering& c);
Graph graph_from_tables(const CsvTable& edges, int n);
Clustering clustering_from_table(const CsvTable& membership);
LinearModel model_from_table(const CsvTable& outcomes, int n);

CsvTable var_shape_table(const VarShapeResult& r);
CsvTable var_shape_realizations_table(const VarShapeResult& r, const std::vector<double>& lambdas);
CsvTable deterministic_table(const DeterministicResult& r);
CsvTable improvement_table(const DeterministicResult& r);
CsvTable pi_hat_table(const DeterministicResult& r);

// Creates the directory (and parents) when missing; returns true if created.
bool ensure_directory(const std::string& dir);
void write_text(const std::string& path, const std::string& text);

}  // namespace satdesign
