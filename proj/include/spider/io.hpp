#pragma once

// File formats: CSV matrices with round-trip precision, JSON problem files,
// CSV result tables, and plot data.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "spider/harness.hpp"
#include "spider/inverse.hpp"
#include "spider/topology.hpp"

namespace spider::io {

inline constexpr int kProblemSchemaVersion = 1;

// Shortest-safe round-trip form: 17 significant digits, locale independent.
std::string format_double(double v);
// Throws Error(parse_error).
double parse_double(std::string_view text);

// One matrix row per line, comma separated, no header.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& matrix);
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& matrix);
// Throws Error(parse_error) on ragged or non-numeric input, Error(io_error)
// when the file cannot be read.
Eigen::MatrixXd read_matrix_csv(std::istream& in);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

// Reads a vector stored either as one column or one row.
Eigen::VectorXd read_vector_csv(const std::filesystem::path& path);

struct ProblemFile {
  int version = kProblemSchemaVersion;
  int m = 0;
  int s = 1;
  std::vector<int> block_of;  // one-based block per edge id
  std::optional<std::vector<double>> conductance;
  std::optional<Eigen::MatrixXd> response_matrix;
  double mu = 1.0;
  double tol = 1e-8;
  int max_iter = 500;
  Formulation formulation = Formulation::reduced;
  std::uint64_t seed = 0;
};

// `base_dir` resolves a response_matrix given as a relative path.
ProblemFile problem_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
nlohmann::json problem_to_json(const ProblemFile& problem);
ProblemFile load_problem(const std::filesystem::path& path);

// Builds the solver input; requires a response matrix. The conductance, if
// present, becomes the ground truth.
InverseProblemSpec to_spec(const ProblemFile& problem);

nlohmann::json topology_to_json(const SpiderTopology& topology);
nlohmann::json partition_to_json(const EdgePartition& partition);
EdgePartition partition_from_json(const nlohmann::json& doc);

// ResultFile: m,s,repetition,seed,error,misfit,ratio,p,penalty,iterations,status
extern const char* const kResultHeader;
void write_results_csv(std::ostream& out, const std::vector<InstanceResult>& rows);
std::vector<InstanceResult> read_results_csv(std::istream& in);

// m,s,instances,failures,skipped,max_error,max_ratio
void write_summary_csv(std::ostream& out, const std::vector<CellResult>& cells);

std::vector<InstanceResult> flatten(const std::vector<CellResult>& cells);

SweepConfig sweep_config_from_json(const nlohmann::json& doc);
nlohmann::json sweep_config_to_json(const SweepConfig& config);

}  // namespace spider::io
