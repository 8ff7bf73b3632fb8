#pragma once

// Inverse conductance problem with a piecewise-constant penalty:
//
//   p(c, V) = ||N'(c, V) - N||_F^2 + mu * ||c - cbar(c)||^2
//
// where N'(j, t) = sum_k c_jk (v_j^t - v_k^t) over boundary rows, the block
// values cbar are eliminated as block means, and the interior rows of L(c) V
// must vanish. The reduced formulation eliminates V through the harmonic
// extensions; the full-space formulation keeps V as variables.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "spider/forward.hpp"
#include "spider/init_guess.hpp"
#include "spider/topology.hpp"

namespace spider {

struct ObjectiveBreakdown {
  double misfit = 0.0;   // ||N' - N||_F^2 over all m^2 entries
  double penalty = 0.0;  // ||c - cbar||^2
  double total = 0.0;    // misfit + mu * penalty
};

// Arithmetic mean of c over each block.
std::vector<double> block_means(const ConductanceVector& c, const EdgePartition& partition);

// c - cbar, i.e. c with each block's mean removed.
ConductanceVector deviation_from_blocks(const ConductanceVector& c, const EdgePartition& partition);

struct FullObjective {
  ObjectiveBreakdown objective;
  ResponseMatrix response;            // boundary rows of L(c) V, not symmetrized
  Eigen::MatrixXd constraint_residuals;  // (n - m) x m, interior rows of L(c) V
};

// `interior_voltages` is (n - m) x m; boundary potentials are fixed to the
// identity. Throws Error(dimension_mismatch) on any size mismatch.
FullObjective full_objective(const SpiderTopology& topology, const ConductanceVector& c,
                             const Eigen::MatrixXd& interior_voltages, const ResponseMatrix& data,
                             const EdgePartition& partition, double mu);

ObjectiveBreakdown reduced_objective(const SpiderTopology& topology, const ConductanceVector& c,
                                     const ResponseMatrix& data, const EdgePartition& partition, double mu);

// Gradient of reduced_objective's total with respect to c.
Eigen::VectorXd objective_gradient(const SpiderTopology& topology, const ConductanceVector& c,
                                   const ResponseMatrix& data, const EdgePartition& partition, double mu);

// Gradient of full_objective's total with respect to the full-space
// variables [c; W], W flattened row-major over (interior vertex, t).
Eigen::VectorXd full_objective_gradient(const SpiderTopology& topology, const ConductanceVector& c,
                                        const Eigen::MatrixXd& interior_voltages, const ResponseMatrix& data,
                                        const EdgePartition& partition, double mu);

// |E| + m (n - m) = m (m^2 - m + 2) / 4 unknowns of the full-space problem.
long full_space_variable_count(const SpiderTopology& topology);
long constraint_count(const SpiderTopology& topology);

// ||c' - c|| / ||N' - N||_F; std::nullopt when the denominator is below 1e-300.
std::optional<double> lipschitz_ratio(const ConductanceVector& c_prime, const ConductanceVector& c_true,
                                      const ResponseMatrix& n_prime, const ResponseMatrix& n_data);

enum class Formulation { reduced, full_space };

std::string_view formulation_name(Formulation f);
Formulation parse_formulation(std::string_view name);

struct SolverOptions {
  double stationarity_tol = 1e-8;
  double feasibility_tol = 1e-8;
  int max_iterations = 500;
  double initial_radius = 1.0;
  double lower_bound = 1e-10;
  // Reported conductances below this are clamped to zero.
  double clamp_threshold = 1e-8;
  // Stop as stagnant when p improves by less than this (relative) over
  // `stagnation_window` iterations.
  double stagnation_rel = 1e-16;
  int stagnation_window = 10;
  Formulation formulation = Formulation::reduced;
  ConstantFitMethod warm_start = ConstantFitMethod::closed_form;
};

struct InverseProblemSpec {
  SpiderTopology topology;
  EdgePartition partition;
  ResponseMatrix data;
  double mu = 1.0;
  SolverOptions solver;
  std::uint64_t seed = 0;
  std::optional<ConductanceVector> ground_truth;
};

enum class SolveStatus { converged, converged_stagnant, max_iterations, failed };

std::string_view status_name(SolveStatus s);

struct RecoveryResult {
  ConductanceVector conductance;
  std::vector<double> block_means;
  ResponseMatrix response;
  ObjectiveBreakdown objective;
  int iterations = 0;
  SolveStatus status = SolveStatus::failed;
  double stationarity = 0.0;  // projected-gradient norm (reduced) or KKT residual (full space)
  double feasibility = 0.0;   // max |g_j^t| (zero by construction for the reduced form)
  double warm_start_c0 = 0.0;
  bool clamped = false;
  // Merit value at every accepted iterate, starting with the warm start.
  std::vector<double> history;
  std::vector<std::string> warnings;
  std::optional<double> ratio;  // set when ground truth is supplied

  bool ok() const { return status == SolveStatus::converged || status == SolveStatus::converged_stagnant; }
};

// Throws Error(invalid_config) for negative mu or nonpositive tolerances and
// Error(dimension_mismatch) when data or partition do not fit the topology.
// Non-convergence is reported through `status`, never thrown.
RecoveryResult solve(const InverseProblemSpec& spec);

namespace detail {
RecoveryResult solve_reduced(const InverseProblemSpec& spec, const InitialGuess& start);
RecoveryResult solve_full_space(const InverseProblemSpec& spec, const InitialGuess& start);
void finalize(const InverseProblemSpec& spec, RecoveryResult& result);
}  // namespace detail

}  // namespace spider
