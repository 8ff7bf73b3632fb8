#include "spider/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "spider/error.hpp"
#include "spider/rng.hpp"

namespace spider {

void validate(const SweepConfig& config) {
  if (config.m_values.empty() || config.s_values.empty()) {
    throw Error(ErrorCode::invalid_config, "m and s lists must be nonempty");
  }
  for (int m : config.m_values) {
    if (!valid_spider_m(m)) throw Error(ErrorCode::invalid_config, "invalid m = " + std::to_string(m));
  }
  for (int s : config.s_values) {
    if (s < 1) throw Error(ErrorCode::invalid_config, "s must be >= 1");
  }
  if (config.repetitions < 1) throw Error(ErrorCode::invalid_config, "repetitions must be >= 1");
  if (!(config.lo > 0.0) || !(config.lo <= config.hi)) {
    throw Error(ErrorCode::invalid_config, "value interval must satisfy 0 < lo <= hi");
  }
  if (!(config.mu >= 0.0)) throw Error(ErrorCode::invalid_config, "mu must be >= 0");
  if (config.threads < 1) throw Error(ErrorCode::invalid_config, "threads must be >= 1");
}

std::uint64_t instance_seed(std::uint64_t root, int m, int s, int repetition) {
  return derive_seed(root, {static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(s),
                            static_cast<std::uint64_t>(repetition)});
}

InstanceResult run_instance(int m, int s, int repetition, const SweepConfig& config) {
  InstanceResult out;
  out.m = m;
  out.s = s;
  out.repetition = repetition;
  out.seed = instance_seed(config.root_seed, m, s, repetition);

  const SpiderTopology topology = build_spider(m);
  const EdgePartition partition = random_partition(topology, s, derive_seed(out.seed, {1}));
  const PiecewiseConductance truth = sample_pc_conductance(partition, config.lo, config.hi, derive_seed(out.seed, {2}));
  const ResponseMatrix data = response_matrix(assemble_laplacian(topology, truth.conductance));

  InverseProblemSpec spec{topology, partition, data, config.mu, config.solver, out.seed, truth.conductance};
  try {
    const RecoveryResult rec = solve(spec);
    out.error = (rec.conductance - truth.conductance).norm();
    out.misfit = std::sqrt(rec.objective.misfit);
    out.ratio = rec.ratio;
    out.p = rec.objective.total;
    out.penalty = rec.objective.penalty;
    out.iterations = rec.iterations;
    out.status = rec.status;
  } catch (const Error&) {
    out.status = SolveStatus::failed;
    out.error = std::numeric_limits<double>::quiet_NaN();
    out.misfit = std::numeric_limits<double>::quiet_NaN();
    out.p = std::numeric_limits<double>::quiet_NaN();
    out.penalty = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

namespace {

struct Job {
  std::size_t cell;
  int repetition;
};

void aggregate(CellResult& cell) {
  cell.failures = 0;
  cell.max_error = 0.0;
  cell.max_ratio.reset();
  for (const InstanceResult& r : cell.instances) {
    if (!r.ok()) {
      ++cell.failures;
      continue;
    }
    cell.max_error = std::max(cell.max_error, r.error);
    if (r.ratio) cell.max_ratio = std::max(cell.max_ratio.value_or(*r.ratio), *r.ratio);
  }
}

std::vector<CellResult> run_cells(std::vector<CellResult> cells, int reps, const SweepConfig& config) {
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].skipped) continue;
    cells[i].instances.resize(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) jobs.push_back({i, r});
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      CellResult& cell = cells[jobs[j].cell];
      cell.instances[static_cast<std::size_t>(jobs[j].repetition)] =
          run_instance(cell.m, cell.s, jobs[j].repetition, config);
    }
  };
  const int threads = std::max(1, std::min<int>(config.threads, static_cast<int>(jobs.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (CellResult& cell : cells) aggregate(cell);
  return cells;
}

}  // namespace

std::vector<CellResult> run_recovery_sweep(const SweepConfig& config) {
  validate(config);
  std::vector<CellResult> cells;
  for (int m : config.m_values) {
    const int edge_count = m * (m - 1) / 2;
    for (int s : config.s_values) {
      CellResult cell;
      cell.m = m;
      cell.s = s;
      cell.skipped = s > edge_count;
      cells.push_back(cell);
    }
  }
  return run_cells(std::move(cells), config.repetitions, config);
}

RegressionResult linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::dimension_mismatch, "x and y differ in length");
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isfinite(x[i]) && std::isfinite(y[i])) {
      xs.push_back(x[i]);
      ys.push_back(y[i]);
    }
  }
  const auto n = static_cast<double>(xs.size());
  if (xs.size() < 3) throw Error(ErrorCode::insufficient_points, "need at least 3 finite points");

  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw Error(ErrorCode::zero_variance, "x has zero variance");

  RegressionResult out;
  out.points = static_cast<int>(xs.size());
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (out.intercept + out.slope * xs[i]);
    ss_res += e * e;
  }
  out.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 0.0;

  const double dof = n - 2.0;
  const double se = std::sqrt(ss_res / dof / sxx);
  if (se > 0.0) {
    const boost::math::students_t dist(dof);
    out.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.slope / se)));
  } else {
    out.p_value = out.slope != 0.0 ? 0.0 : 1.0;
  }
  return out;
}

RatioStudy run_ratio_vs_s(int m, int s_max, int reps, const SweepConfig& config) {
  SweepConfig cfg = config;
  cfg.m_values = {m};
  cfg.s_values = {1};
  cfg.repetitions = reps;
  validate(cfg);
  const int edge_count = m * (m - 1) / 2;
  if (s_max < 1 || s_max > edge_count) {
    throw Error(ErrorCode::invalid_config, "s_max = " + std::to_string(s_max) + " outside [1, " +
                                               std::to_string(edge_count) + "]");
  }
  std::vector<CellResult> cells;
  for (int s = 1; s <= s_max; ++s) {
    CellResult cell;
    cell.m = m;
    cell.s = s;
    cells.push_back(cell);
  }

  RatioStudy out;
  out.m = m;
  out.cells = run_cells(std::move(cells), reps, cfg);
  std::vector<double> xs;
  std::vector<double> ys;
  for (const CellResult& cell : out.cells) {
    if (cell.max_ratio && *cell.max_ratio > 0.0) {
      xs.push_back(cell.s);
      ys.push_back(std::log10(*cell.max_ratio));
    }
  }
  if (xs.size() >= 3) out.regression = linear_fit(xs, ys);
  return out;
}

ProbeStudy run_illposedness_probe(std::span<const int> m_values) {
  std::vector<int> ms(m_values.begin(), m_values.end());
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
  ProbeStudy out;
  for (int m : ms) out.rows.push_back(conditioning_probe(m));
  out.sigma_min_decreasing = true;
  out.cond_increasing = true;
  for (std::size_t i = 1; i < out.rows.size(); ++i) {
    out.sigma_min_decreasing = out.sigma_min_decreasing && out.rows[i].sigma_min < out.rows[i - 1].sigma_min;
    out.cond_increasing = out.cond_increasing && out.rows[i].cond > out.rows[i - 1].cond;
  }
  if (!out.rows.empty()) {
    double lo = out.rows.front().cond;
    double hi = lo;
    for (const auto& r : out.rows) {
      lo = std::min(lo, r.cond);
      hi = std::max(hi, r.cond);
    }
    out.cond_decades = std::log10(hi / lo);
  }
  return out;
}

}  // namespace spider
