#include "spider/inverse.hpp"

#include <cmath>
#include <string>

#include "spider/error.hpp"
#include "spider/simd.hpp"

namespace spider {

namespace {

void check_sizes(const SpiderTopology& topology, const ConductanceVector& c, const ResponseMatrix& data,
                 const EdgePartition& partition) {
  if (c.size() != topology.edge_count()) {
    throw Error(ErrorCode::dimension_mismatch, "conductance length does not match the edge count");
  }
  if (partition.edge_count() != topology.edge_count()) {
    throw Error(ErrorCode::dimension_mismatch, "partition does not cover the edges");
  }
  if (data.rows() != topology.m() || data.cols() != topology.m()) {
    throw Error(ErrorCode::dimension_mismatch, "response matrix must be m x m");
  }
}

double frobenius_sq_diff(const ResponseMatrix& a, const ResponseMatrix& b) {
  const auto size = static_cast<std::size_t>(a.size());
  return simd::sum_sq_diff({a.data(), size}, {b.data(), size});
}

}  // namespace

std::vector<double> block_means(const ConductanceVector& c, const EdgePartition& partition) {
  std::vector<double> sums(static_cast<std::size_t>(partition.s()), 0.0);
  for (int e = 0; e < partition.edge_count(); ++e) sums[static_cast<std::size_t>(partition.block_of(e))] += c[e];
  for (int b = 0; b < partition.s(); ++b) {
    sums[static_cast<std::size_t>(b)] /= partition.block_sizes()[static_cast<std::size_t>(b)];
  }
  return sums;
}

ConductanceVector deviation_from_blocks(const ConductanceVector& c, const EdgePartition& partition) {
  const std::vector<double> means = block_means(c, partition);
  ConductanceVector out(c.size());
  for (int e = 0; e < partition.edge_count(); ++e) out[e] = c[e] - means[static_cast<std::size_t>(partition.block_of(e))];
  return out;
}

FullObjective full_objective(const SpiderTopology& topology, const ConductanceVector& c,
                             const Eigen::MatrixXd& interior_voltages, const ResponseMatrix& data,
                             const EdgePartition& partition, double mu) {
  check_sizes(topology, c, data, partition);
  const int m = topology.m();
  const int n = topology.n();
  if (interior_voltages.rows() != n - m || interior_voltages.cols() != m) {
    throw Error(ErrorCode::dimension_mismatch, "interior voltages must be (n - m) x m");
  }
  auto potential = [&](int x, int t) { return x < m ? (x == t ? 1.0 : 0.0) : interior_voltages(x - m, t); };

  Eigen::MatrixXd currents = Eigen::MatrixXd::Zero(n, m);
  for (const Edge& e : topology.edges()) {
    for (int t = 0; t < m; ++t) {
      const double flow = c[e.id] * (potential(e.u, t) - potential(e.v, t));
      currents(e.u, t) += flow;
      currents(e.v, t) -= flow;
    }
  }

  FullObjective out;
  out.response = currents.topRows(m);
  out.constraint_residuals = currents.bottomRows(n - m);
  out.objective.misfit = frobenius_sq_diff(out.response, data);
  out.objective.penalty = deviation_from_blocks(c, partition).squaredNorm();
  out.objective.total = out.objective.misfit + mu * out.objective.penalty;
  return out;
}

ObjectiveBreakdown reduced_objective(const SpiderTopology& topology, const ConductanceVector& c,
                                     const ResponseMatrix& data, const EdgePartition& partition, double mu) {
  check_sizes(topology, c, data, partition);
  const ResponseMatrix n_prime = response_matrix(assemble_laplacian(topology, c));
  ObjectiveBreakdown out;
  out.misfit = frobenius_sq_diff(n_prime, data);
  out.penalty = deviation_from_blocks(c, partition).squaredNorm();
  out.total = out.misfit + mu * out.penalty;
  return out;
}

Eigen::VectorXd objective_gradient(const SpiderTopology& topology, const ConductanceVector& c,
                                   const ResponseMatrix& data, const EdgePartition& partition, double mu) {
  check_sizes(topology, c, data, partition);
  const ForwardState state = solve_forward(topology, c);
  const SensitivityJacobian jac = sensitivity_jacobian(topology, state.extensions);
  const int m = topology.m();
  // Row-major residual so that index s * m + t matches the Jacobian slices.
  RowMatrix residual = state.response - data;
  const auto mm = static_cast<std::size_t>(m * m);
  Eigen::VectorXd grad(topology.edge_count());
  for (int e = 0; e < topology.edge_count(); ++e) {
    grad[e] = 2.0 * simd::dot({jac.slices.row(e).data(), mm}, {residual.data(), mm});
  }
  // The block-mean centering is an orthogonal projector, so the penalty
  // gradient is 2 mu (c - cbar).
  grad += 2.0 * mu * deviation_from_blocks(c, partition);
  return grad;
}

long full_space_variable_count(const SpiderTopology& topology) {
  return static_cast<long>(topology.edge_count()) + constraint_count(topology);
}

long constraint_count(const SpiderTopology& topology) {
  return static_cast<long>(topology.m()) * topology.interior_count();
}

std::optional<double> lipschitz_ratio(const ConductanceVector& c_prime, const ConductanceVector& c_true,
                                      const ResponseMatrix& n_prime, const ResponseMatrix& n_data) {
  if (c_prime.size() != c_true.size() || n_prime.rows() != n_data.rows() || n_prime.cols() != n_data.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "ratio operands differ in size");
  }
  const double denom = std::sqrt(frobenius_sq_diff(n_prime, n_data));
  if (!(denom >= 1e-300)) return std::nullopt;
  return (c_prime - c_true).norm() / denom;
}

std::string_view formulation_name(Formulation f) {
  return f == Formulation::reduced ? "reduced" : "full-space";
}

Formulation parse_formulation(std::string_view name) {
  if (name == "reduced") return Formulation::reduced;
  if (name == "full-space" || name == "full_space" || name == "full") return Formulation::full_space;
  throw Error(ErrorCode::invalid_config, "unknown formulation '" + std::string(name) + "'");
}

std::string_view status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::converged_stagnant: return "converged-stagnant";
    case SolveStatus::max_iterations: return "max-iter";
    case SolveStatus::failed: return "failed";
  }
  return "failed";
}

namespace detail {

void finalize(const InverseProblemSpec& spec, RecoveryResult& result) {
  for (int e = 0; e < result.conductance.size(); ++e) {
    if (result.conductance[e] < spec.solver.clamp_threshold) {
      result.conductance[e] = 0.0;
      result.clamped = true;
    }
  }
  if (result.clamped) {
    result.warnings.emplace_back("conductances below " + std::to_string(spec.solver.clamp_threshold) +
                                 " were reported as zero");
  }
  result.block_means = block_means(result.conductance, spec.partition);
  if (spec.ground_truth) {
    result.ratio = lipschitz_ratio(result.conductance, *spec.ground_truth, result.response, spec.data);
  }
}

}  // namespace detail

RecoveryResult solve(const InverseProblemSpec& spec) {
  const SolverOptions& opt = spec.solver;
  if (!(spec.mu >= 0.0) || !std::isfinite(spec.mu)) throw Error(ErrorCode::invalid_config, "mu must be >= 0");
  if (!(opt.stationarity_tol > 0.0) || !(opt.feasibility_tol > 0.0) || opt.max_iterations < 1 ||
      !(opt.initial_radius > 0.0) || !(opt.lower_bound >= 0.0)) {
    throw Error(ErrorCode::invalid_config, "solver tolerances must be positive");
  }
  const SpiderTopology& topology = spec.topology;
  if (spec.data.rows() != topology.m() || spec.data.cols() != topology.m()) {
    throw Error(ErrorCode::dimension_mismatch, "response matrix must be m x m");
  }
  if (spec.partition.edge_count() != topology.edge_count()) {
    throw Error(ErrorCode::dimension_mismatch, "partition does not cover the edges");
  }
  if (spec.ground_truth && spec.ground_truth->size() != topology.edge_count()) {
    throw Error(ErrorCode::dimension_mismatch, "ground-truth conductance length does not match the edge count");
  }
  if (!spec.data.allFinite()) throw Error(ErrorCode::invalid_config, "response matrix has non-finite entries");

  std::vector<std::string> warnings;
  const double scale = std::max(1.0, spec.data.cwiseAbs().maxCoeff());
  if ((spec.data - spec.data.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    warnings.emplace_back("response matrix is not symmetric");
  }
  if (spec.data.rowwise().sum().cwiseAbs().maxCoeff() > 1e-10 * scale) {
    warnings.emplace_back("response matrix rows do not sum to zero");
  }

  const InitialGuess start = initial_guess(spec.data, topology, opt.warm_start);
  RecoveryResult result = opt.formulation == Formulation::reduced ? detail::solve_reduced(spec, start)
                                                                  : detail::solve_full_space(spec, start);
  result.warm_start_c0 = start.c0;
  result.warnings.insert(result.warnings.begin(), warnings.begin(), warnings.end());
  detail::finalize(spec, result);
  return result;
}

}  // namespace spider
