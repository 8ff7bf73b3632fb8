#include "spider/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "spider/error.hpp"

namespace spider::io {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorCode::parse_error, "not a number: '" + std::string(text) + "'");
  }
  return v;
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& matrix) {
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      if (j) out << ',';
      out << format_double(matrix(i, j));
    }
    out << '\n';
  }
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& matrix) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  write_matrix_csv(out, matrix);
  if (!out) throw Error(ErrorCode::io_error, "failed writing " + path.string());
}

Eigen::MatrixXd read_matrix_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::string_view rest(line);
    for (;;) {
      const auto comma = rest.find(',');
      row.push_back(parse_double(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::parse_error, "ragged matrix: row " + std::to_string(rows.size() + 1));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::parse_error, "empty matrix");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return out;
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  return read_matrix_csv(in);
}

Eigen::VectorXd read_vector_csv(const std::filesystem::path& path) {
  const Eigen::MatrixXd m = read_matrix_csv(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw Error(ErrorCode::parse_error, path.string() + " is not a single row or column");
}

namespace {

template <class T>
T required(const json& doc, const char* key) {
  if (!doc.contains(key)) throw Error(ErrorCode::parse_error, std::string("missing field '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
T optional_field(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key) || doc.at(key).is_null()) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("field '") + key + "': " + e.what());
  }
}

Eigen::MatrixXd matrix_from_rows(const json& rows) {
  if (!rows.is_array() || rows.empty()) throw Error(ErrorCode::parse_error, "response_matrix rows must be a nonempty array");
  const auto nr = rows.size();
  const auto nc = rows.at(0).size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(nr), static_cast<Eigen::Index>(nc));
  for (std::size_t i = 0; i < nr; ++i) {
    if (!rows.at(i).is_array() || rows.at(i).size() != nc) throw Error(ErrorCode::parse_error, "ragged response_matrix");
    for (std::size_t j = 0; j < nc; ++j) {
      if (!rows.at(i).at(j).is_number()) throw Error(ErrorCode::parse_error, "response_matrix entry is not a number");
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows.at(i).at(j).get<double>();
    }
  }
  return out;
}

SolveStatus parse_status(std::string_view name) {
  for (SolveStatus s : {SolveStatus::converged, SolveStatus::converged_stagnant, SolveStatus::max_iterations,
                        SolveStatus::failed}) {
    if (status_name(s) == name) return s;
  }
  throw Error(ErrorCode::parse_error, "unknown status '" + std::string(name) + "'");
}

std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

}  // namespace

ProblemFile problem_from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw Error(ErrorCode::parse_error, "problem file must be a JSON object");
  ProblemFile p;
  p.version = required<int>(doc, "version");
  if (p.version != kProblemSchemaVersion) {
    throw Error(ErrorCode::parse_error, "unsupported problem schema version " + std::to_string(p.version));
  }
  p.m = required<int>(doc, "m");
  if (!valid_spider_m(p.m)) throw Error(ErrorCode::invalid_m, "m = " + std::to_string(p.m));
  const auto edge_count = static_cast<std::size_t>(p.m * (p.m - 1) / 2);

  if (doc.contains("partition")) {
    const json& part = doc.at("partition");
    p.s = required<int>(part, "s");
    p.block_of = required<std::vector<int>>(part, "block_of");
  } else {
    p.s = 1;
    p.block_of.assign(edge_count, 1);
  }
  if (p.block_of.size() != edge_count) {
    throw Error(ErrorCode::parse_error, "partition.block_of must have " + std::to_string(edge_count) + " entries");
  }
  if (doc.contains("conductance") && !doc.at("conductance").is_null()) {
    p.conductance = required<std::vector<double>>(doc, "conductance");
    if (p.conductance->size() != edge_count) {
      throw Error(ErrorCode::parse_error, "conductance must have " + std::to_string(edge_count) + " entries");
    }
  }
  if (doc.contains("response_matrix") && !doc.at("response_matrix").is_null()) {
    const json& rm = doc.at("response_matrix");
    if (rm.is_string()) {
      std::filesystem::path path = rm.get<std::string>();
      if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
      p.response_matrix = read_matrix_csv(path);
    } else {
      p.response_matrix = matrix_from_rows(rm);
    }
    if (p.response_matrix->rows() != p.m || p.response_matrix->cols() != p.m) {
      throw Error(ErrorCode::parse_error, "response_matrix must be m x m");
    }
  }
  p.mu = optional_field<double>(doc, "mu", 1.0);
  if (doc.contains("solver")) {
    const json& solver = doc.at("solver");
    p.tol = optional_field<double>(solver, "tol", 1e-8);
    p.max_iter = optional_field<int>(solver, "max_iter", 500);
    p.formulation = parse_formulation(optional_field<std::string>(solver, "formulation", "reduced"));
  }
  p.seed = optional_field<std::uint64_t>(doc, "seed", 0);
  return p;
}

json problem_to_json(const ProblemFile& p) {
  json doc;
  doc["version"] = p.version;
  doc["m"] = p.m;
  doc["partition"] = {{"s", p.s}, {"block_of", p.block_of}};
  if (p.conductance) doc["conductance"] = *p.conductance;
  if (p.response_matrix) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < p.response_matrix->rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < p.response_matrix->cols(); ++j) row.push_back((*p.response_matrix)(i, j));
      rows.push_back(row);
    }
    doc["response_matrix"] = rows;
  }
  doc["mu"] = p.mu;
  doc["solver"] = {{"tol", p.tol}, {"max_iter", p.max_iter}, {"formulation", std::string(formulation_name(p.formulation))}};
  doc["seed"] = p.seed;
  return doc;
}

ProblemFile load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse_error, path.string() + ": " + e.what());
  }
  return problem_from_json(doc, path.parent_path());
}

InverseProblemSpec to_spec(const ProblemFile& p) {
  if (!p.response_matrix) throw Error(ErrorCode::parse_error, "problem file has no response_matrix");
  std::vector<int> labels(p.block_of.size());
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = p.block_of[i] - 1;
  InverseProblemSpec spec{build_spider(p.m), EdgePartition(p.s, std::move(labels)), *p.response_matrix, p.mu, {}, p.seed, {}};
  spec.solver.stationarity_tol = p.tol;
  spec.solver.max_iterations = p.max_iter;
  spec.solver.formulation = p.formulation;
  if (p.conductance) spec.ground_truth = Eigen::Map<const Eigen::VectorXd>(p.conductance->data(), static_cast<Eigen::Index>(p.conductance->size()));
  return spec;
}

json topology_to_json(const SpiderTopology& t) {
  json edges = json::array();
  for (const Edge& e : t.edges()) {
    edges.push_back({{"id", e.id}, {"u", e.u + 1}, {"v", e.v + 1}, {"kind", e.kind == EdgeKind::radial ? "radial" : "circular"}});
  }
  return {{"m", t.m()}, {"ell", t.ell()}, {"n", t.n()}, {"edges", edges}};
}

json partition_to_json(const EdgePartition& partition) {
  std::vector<int> labels(partition.labels());
  for (int& l : labels) ++l;
  return {{"s", partition.s()}, {"block_of", labels}};
}

EdgePartition partition_from_json(const json& doc) {
  const int s = required<int>(doc, "s");
  std::vector<int> labels = required<std::vector<int>>(doc, "block_of");
  for (int& l : labels) --l;
  return EdgePartition(s, std::move(labels));
}

const char* const kResultHeader = "m,s,repetition,seed,error,misfit,ratio,p,penalty,iterations,status";

void write_results_csv(std::ostream& out, const std::vector<InstanceResult>& rows) {
  out << kResultHeader << '\n';
  for (const InstanceResult& r : rows) {
    out << r.m << ',' << r.s << ',' << r.repetition << ',' << r.seed << ',' << format_double(r.error) << ','
        << format_double(r.misfit) << ',' << format_optional(r.ratio) << ',' << format_double(r.p) << ','
        << format_double(r.penalty) << ',' << r.iterations << ',' << status_name(r.status) << '\n';
  }
}

std::vector<InstanceResult> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::parse_error, "empty result file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultHeader) throw Error(ErrorCode::parse_error, "unexpected result header");
  std::vector<InstanceResult> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 11) throw Error(ErrorCode::parse_error, "result row needs 11 fields");
    InstanceResult r;
    try {
      r.m = std::stoi(f[0]);
      r.s = std::stoi(f[1]);
      r.repetition = std::stoi(f[2]);
      r.seed = std::stoull(f[3]);
      r.iterations = std::stoi(f[9]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::parse_error, "bad integer field in result row");
    }
    r.error = parse_double(f[4]);
    r.misfit = parse_double(f[5]);
    if (f[6] != "NA") r.ratio = parse_double(f[6]);
    r.p = parse_double(f[7]);
    r.penalty = parse_double(f[8]);
    r.status = parse_status(f[10]);
    rows.push_back(r);
  }
  return rows;
}

void write_summary_csv(std::ostream& out, const std::vector<CellResult>& cells) {
  out << "m,s,instances,failures,skipped,max_error,max_ratio\n";
  for (const CellResult& c : cells) {
    out << c.m << ',' << c.s << ',' << c.instances.size() << ',' << c.failures << ',' << (c.skipped ? 1 : 0) << ','
        << (c.skipped ? std::string("NA") : format_double(c.max_error)) << ',' << format_optional(c.max_ratio) << '\n';
  }
}

std::vector<InstanceResult> flatten(const std::vector<CellResult>& cells) {
  std::vector<InstanceResult> out;
  for (const CellResult& c : cells) out.insert(out.end(), c.instances.begin(), c.instances.end());
  return out;
}

SweepConfig sweep_config_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::invalid_config, "config must be a JSON object");
  SweepConfig c;
  try {
    c.m_values = optional_field(doc, "m", c.m_values);
    c.s_values = optional_field(doc, "s", c.s_values);
    c.repetitions = optional_field(doc, "repetitions", c.repetitions);
    c.lo = optional_field(doc, "lo", c.lo);
    c.hi = optional_field(doc, "hi", c.hi);
    c.mu = optional_field(doc, "mu", c.mu);
    c.root_seed = optional_field<std::uint64_t>(doc, "seed", c.root_seed);
    c.threads = optional_field(doc, "threads", c.threads);
    if (doc.contains("solver")) {
      const json& s = doc.at("solver");
      c.solver.stationarity_tol = optional_field(s, "tol", c.solver.stationarity_tol);
      c.solver.max_iterations = optional_field(s, "max_iter", c.solver.max_iterations);
      c.solver.formulation = parse_formulation(optional_field<std::string>(s, "formulation", "reduced"));
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::invalid_config, e.what());
  }
  return c;
}

json sweep_config_to_json(const SweepConfig& c) {
  return {{"m", c.m_values},
          {"s", c.s_values},
          {"repetitions", c.repetitions},
          {"lo", c.lo},
          {"hi", c.hi},
          {"mu", c.mu},
          {"seed", c.root_seed},
          {"threads", c.threads},
          {"solver",
           {{"tol", c.solver.stationarity_tol},
            {"max_iter", c.solver.max_iterations},
            {"formulation", std::string(formulation_name(c.solver.formulation))}}}};
}

}  // namespace spider::io
