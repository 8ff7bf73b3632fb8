#pragma once

// Seeded recovery experiments: sweeps over (m, s), the ratio-versus-s study
// with its log-linear regression, and the conditioning probe.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spider/forward.hpp"
#include "spider/inverse.hpp"

namespace spider {

struct SweepConfig {
  std::vector<int> m_values{3, 7, 11};
  std::vector<int> s_values{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int repetitions = 3;
  double lo = 1.0;
  double hi = 100.0;
  double mu = 1.0;
  std::uint64_t root_seed = 20240601;
  SolverOptions solver;
  int threads = 1;
};

// Throws Error(invalid_config).
void validate(const SweepConfig& config);

struct InstanceResult {
  int m = 0;
  int s = 0;
  int repetition = 0;
  std::uint64_t seed = 0;
  double error = 0.0;   // ||c' - c||
  double misfit = 0.0;  // ||N' - N||_F
  std::optional<double> ratio;
  double p = 0.0;
  double penalty = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::failed;
  bool ok() const { return status == SolveStatus::converged || status == SolveStatus::converged_stagnant; }
};

struct CellResult {
  int m = 0;
  int s = 0;
  bool skipped = false;  // s > |E(m)|
  std::vector<InstanceResult> instances;
  int failures = 0;
  double max_error = 0.0;
  std::optional<double> max_ratio;
};

// Seed of instance (m, s, repetition): derive_seed(root, {m, s, repetition}).
std::uint64_t instance_seed(std::uint64_t root, int m, int s, int repetition);

// Generates the instance from its seed, solves it and records the metrics.
// Solver exceptions become status `failed`.
InstanceResult run_instance(int m, int s, int repetition, const SweepConfig& config);

// Cells in (m, s) order of the config; instances in repetition order
// regardless of the thread count.
std::vector<CellResult> run_recovery_sweep(const SweepConfig& config);

struct RegressionResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double p_value = 1.0;
  int points = 0;
};

// Ordinary least squares y = slope x + intercept. R^2 = 1 - SS_res/SS_tot
// (0 when y is constant); two-sided p-value of the slope from Student's t with
// n - 2 degrees of freedom. Throws Error(insufficient_points) for fewer than
// three finite points and Error(zero_variance) when x is constant.
RegressionResult linear_fit(std::span<const double> x, std::span<const double> y);

struct RatioStudy {
  int m = 0;
  std::vector<CellResult> cells;  // s = 1..s_max
  std::optional<RegressionResult> regression;  // log10(max ratio) against s
};

// Throws Error(invalid_config) if s_max is outside [1, |E(m)|].
RatioStudy run_ratio_vs_s(int m, int s_max, int reps, const SweepConfig& config);

struct ProbeStudy {
  std::vector<ConditioningResult> rows;
  bool sigma_min_decreasing = false;
  bool cond_increasing = false;
  double cond_decades = 0.0;  // log10(max cond / min cond) over the rows
};

ProbeStudy run_illposedness_probe(std::span<const int> m_values);

}  // namespace spider
