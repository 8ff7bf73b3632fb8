// Acceptance checks for the whole library. Prints one PASS/FAIL line per
// criterion and exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "spider/harness.hpp"
#include "spider/init_guess.hpp"
#include "spider/inverse.hpp"
#include "spider/io.hpp"
#include "spider/rng.hpp"

using namespace spider;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double max_abs(const Eigen::MatrixXd& a) { return a.cwiseAbs().maxCoeff(); }

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// 1
Outcome exact_small_forward() {
  const SpiderTopology t = build_spider(3);
  Eigen::Matrix3d expected;
  expected << 2, -1, -1, -1, 2, -1, -1, -1, 2;
  expected /= 3.0;
  const double err = max_abs(response_matrix(assemble_laplacian(t, Eigen::VectorXd::Ones(3))) - expected);
  return {err <= 1e-12, fmt("max deviation %.3g", err)};
}

// 2
Outcome structural_counts() {
  for (int m : {3, 7, 11, 15, 19}) {
    const SpiderTopology t = build_spider(m);
    if (t.edge_count() != m * (m - 1) / 2 || t.n() != (m * m + m + 4) / 4) {
      return {false, "mismatch at m = " + std::to_string(m)};
    }
  }
  return {true, "m = 3, 7, 11, 15, 19"};
}

// 3
Outcome forward_properties() {
  double worst_sym = 0, worst_row = 0, worst_scale = 0, worst_ext = 0;
  bool negative = true;
  for (int i = 0; i < 100; ++i) {
    const int m = i % 2 == 0 ? 7 : 11;
    const SpiderTopology t = build_spider(m);
    const Eigen::VectorXd c = oracle::random_conductance(t, derive_seed(3, {static_cast<std::uint64_t>(i)}));
    const ForwardState fs = solve_forward(t, c);
    const ResponseMatrix& n = fs.response;
    worst_sym = std::max(worst_sym, max_abs(n - n.transpose()));
    worst_row = std::max(worst_row, n.rowwise().sum().cwiseAbs().maxCoeff());
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        if (a != b && !(n(a, b) < 0.0)) negative = false;
    Rng rng(static_cast<std::uint64_t>(i));
    const double alpha = rng.uniform(0.01, 100.0);
    const ResponseMatrix scaled = response_matrix(assemble_laplacian(t, alpha * c));
    worst_scale = std::max(worst_scale, max_abs(scaled - alpha * n) / max_abs(alpha * n));
    // maximum principle: interior potentials lie within the boundary range [0, 1]
    const Eigen::MatrixXd v = fs.extensions.interior();
    worst_ext = std::max({worst_ext, -v.minCoeff(), v.maxCoeff() - 1.0});
  }
  const bool pass = worst_sym <= 1e-10 && worst_row <= 1e-10 && negative && worst_scale <= 1e-12 && worst_ext <= 0.0;
  std::ostringstream d;
  d << "asym " << worst_sym << ", row sum " << worst_row << ", scaling " << worst_scale << ", off-diagonal "
    << (negative ? "negative" : "NOT negative") << ", max-principle excess " << worst_ext;
  return {pass, d.str()};
}

// 4
Outcome gradients() {
  double worst_jac = 0, worst_red = 0, worst_full = 0;
  const SpiderTopology t = build_spider(7);
  const int ne = t.edge_count();
  for (std::uint64_t i = 0; i < 10; ++i) {
    const Eigen::VectorXd c = oracle::random_conductance(t, derive_seed(4, {i, 0}));
    const EdgePartition p = random_partition(t, 1 + static_cast<int>(i % 5), derive_seed(4, {i, 1}));
    const ResponseMatrix data = response_matrix(assemble_laplacian(t, oracle::random_conductance(t, derive_seed(4, {i, 2}))));
    const double mu = 1.0;

    const SensitivityJacobian jac = sensitivity_jacobian(t, c);
    for (int e = 0; e < ne; ++e) {
      const double h = 1e-6 * std::max(1.0, c[e]);
      Eigen::VectorXd cp = c, cm = c;
      cp[e] += h;
      cm[e] -= h;
      const Eigen::MatrixXd fd =
          (response_matrix(assemble_laplacian(t, cp)) - response_matrix(assemble_laplacian(t, cm))) / (2 * h);
      const Eigen::MatrixXd an = jac.slice(e);
      worst_jac = std::max(worst_jac, (fd - an).norm() / an.norm());
    }

    const Eigen::VectorXd g = objective_gradient(t, c, data, p, mu);
    Eigen::VectorXd fd(ne);
    const auto f = [&](const Eigen::VectorXd& x) { return reduced_objective(t, x, data, p, mu).total; };
    for (int e = 0; e < ne; ++e) fd[e] = oracle::central_difference(f, c, e, 1e-6 * std::max(1.0, c[e]));
    worst_red = std::max(worst_red, (fd - g).norm() / g.norm());

    // full-space objective at perturbed (non-harmonic) potentials
    Eigen::MatrixXd w = harmonic_extensions(assemble_laplacian(t, oracle::random_conductance(t, derive_seed(4, {i, 3})))).interior();
    const Eigen::VectorXd gf = full_objective_gradient(t, c, w, data, p, mu);
    Eigen::VectorXd x(gf.size());
    x.head(ne) = c;
    for (int r = 0; r < w.rows(); ++r)
      for (int k = 0; k < 7; ++k) x[ne + r * 7 + k] = w(r, k);
    const auto ff = [&](const Eigen::VectorXd& y) {
      Eigen::MatrixXd wy(w.rows(), 7);
      for (int r = 0; r < w.rows(); ++r)
        for (int k = 0; k < 7; ++k) wy(r, k) = y[ne + r * 7 + k];
      return full_objective(t, y.head(ne), wy, data, p, mu).objective.total;
    };
    Eigen::VectorXd fdf(gf.size());
    for (int j = 0; j < x.size(); ++j) fdf[j] = oracle::central_difference(ff, x, j, 1e-6 * std::max(1.0, std::abs(x[j])));
    worst_full = std::max(worst_full, (fdf - gf).norm() / gf.norm());
  }
  std::ostringstream d;
  d << "relative error: Jacobian " << worst_jac << ", reduced gradient " << worst_red << ", full-space gradient "
    << worst_full;
  return {worst_jac <= 1e-5 && worst_red <= 1e-5 && worst_full <= 1e-5, d.str()};
}

// 5
Outcome warm_start() {
  double worst = 0;
  for (int m : {3, 7, 11, 15}) {
    const SpiderTopology t = build_spider(m);
    for (double c : {0.5, 1.0, 37.2}) {
      const ResponseMatrix n = oracle::kron_response(t, Eigen::VectorXd::Constant(t.edge_count(), c));
      worst = std::max(worst, std::abs(constant_fit(n, t) - c));
    }
  }
  return {worst <= 1e-8, fmt("max |c0 - c| %.3g", worst)};
}

SweepConfig desk_sweep_config() {
  SweepConfig cfg;
  cfg.m_values = {7, 11};
  cfg.s_values = {1, 2, 3, 5};
  cfg.repetitions = 3;
  cfg.lo = 1.0;
  cfg.hi = 100.0;
  cfg.mu = 1.0;
  cfg.solver.stationarity_tol = 1e-8;
  return cfg;
}

// 6
Outcome desk_sweep() {
  std::ostringstream d;
  bool pass = true;
  for (Formulation f : {Formulation::reduced, Formulation::full_space}) {
    SweepConfig cfg = desk_sweep_config();
    cfg.solver.formulation = f;
    double max_err = 0, max_p = 0;
    int bad = 0, total = 0;
    for (const CellResult& cell : run_recovery_sweep(cfg)) {
      for (const InstanceResult& r : cell.instances) {
        ++total;
        if (!r.ok() || !(r.p <= 1e-10) || !(r.error <= 1e-4)) ++bad;
        max_err = std::max(max_err, r.error);
        max_p = std::max(max_p, r.p);
      }
    }
    pass = pass && bad == 0 && total == 24;
    d << formulation_name(f) << ": " << total - bad << "/" << total << " ok, max error " << max_err << ", max p "
      << max_p << "; ";
  }
  return {pass, d.str()};
}

// 7
Outcome ratio_regression() {
  SweepConfig cfg;
  cfg.mu = 1.0;
  const RatioStudy study = run_ratio_vs_s(11, 20, 10, cfg);
  double low_max = 0, high_min = std::numeric_limits<double>::infinity();
  bool complete = true;
  for (const CellResult& cell : study.cells) {
    if (!cell.max_ratio) {
      complete = false;
      continue;
    }
    if (cell.s <= 5) low_max = std::max(low_max, *cell.max_ratio);
    if (cell.s >= 15) high_min = std::min(high_min, *cell.max_ratio);
  }
  if (!study.regression) return {false, "no regression"};
  const RegressionResult& r = *study.regression;
  std::ostringstream d;
  d << "slope " << r.slope << ", R^2 " << r.r_squared << ", p " << r.p_value << "; max ratio s<=5 " << low_max
    << ", min of max ratio s>=15 " << high_min;
  return {complete && r.slope > 0.0 && 10.0 * low_max <= high_min, d.str()};
}

// 8
Outcome illposedness() {
  // Frozen from the first run: log10 cond spans 8.60 decades over m = 7..19.
  constexpr double kFrozenDecades = 8.5;
  const std::vector<int> ms{7, 11, 15, 19};
  const ProbeStudy p = run_illposedness_probe(ms);
  std::ostringstream d;
  d << "cond";
  for (const auto& r : p.rows) d << ' ' << r.cond;
  d << "; span " << p.cond_decades << " decades";
  return {p.cond_increasing && p.cond_decades >= 4.0 && p.cond_decades >= kFrozenDecades, d.str()};
}

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 9
Outcome determinism() {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "spider_acceptance";
  std::filesystem::create_directories(dir);
  auto run_to = [&](const std::string& tag, int threads) {
    SweepConfig cfg = desk_sweep_config();
    cfg.threads = threads;
    const std::vector<CellResult> cells = run_recovery_sweep(cfg);
    {
      std::ofstream out(dir / (tag + "_results.csv"), std::ios::binary);
      io::write_results_csv(out, io::flatten(cells));
    }
    std::ofstream out(dir / (tag + "_summary.csv"), std::ios::binary);
    io::write_summary_csv(out, cells);
  };
  run_to("a", 1);
  run_to("b", 1);
  run_to("c", 2);
  bool same = true;
  for (const char* kind : {"_results.csv", "_summary.csv"}) {
    const std::string a = file_bytes(dir / (std::string("a") + kind));
    same = same && !a.empty() && a == file_bytes(dir / (std::string("b") + kind)) &&
           a == file_bytes(dir / (std::string("c") + kind));
  }
  std::filesystem::remove_all(dir);
  return {same, same ? "results and summary identical over 3 runs (1, 1, 2 threads)" : "files differ"};
}

// 10
Outcome formulations_agree() {
  double worst_c = 0, worst_obj = 0;
  bool all_ok = true;
  const SpiderTopology t = build_spider(7);
  for (std::uint64_t i = 0; i < 3; ++i) {
    const std::uint64_t seed = derive_seed(10, {i});
    const EdgePartition p = random_partition(t, 3, derive_seed(seed, {1}));
    const PiecewiseConductance pc = sample_pc_conductance(p, 1.0, 100.0, derive_seed(seed, {2}));
    InverseProblemSpec spec{t, p, response_matrix(assemble_laplacian(t, pc.conductance)), 1.0, {}, seed, pc.conductance};
    const RecoveryResult a = solve(spec);
    spec.solver.formulation = Formulation::full_space;
    const RecoveryResult b = solve(spec);
    all_ok = all_ok && a.ok() && b.ok();
    worst_c = std::max(worst_c, (a.conductance - b.conductance).cwiseAbs().maxCoeff());
    worst_obj = std::max({worst_obj, std::abs(a.objective.misfit - b.objective.misfit),
                          std::abs(a.objective.penalty - b.objective.penalty),
                          std::abs(a.objective.total - b.objective.total)});
  }
  std::ostringstream d;
  d << "max |c_reduced - c_full| " << worst_c << ", max objective difference " << worst_obj;
  return {all_ok && worst_c <= 1e-4 && worst_obj <= 1e-8, d.str()};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "exact m = 3 forward map", 1, exact_small_forward},
      {2, "structural counts", 1, structural_counts},
      {3, "forward-map properties (100 instances)", 30, forward_properties},
      {4, "Jacobian and gradients vs finite differences", 60, gradients},
      {5, "warm-start exactness", 10, warm_start},
      {6, "desk recovery sweep", 600, desk_sweep},
      {7, "ratio regression, m = 11, s = 1..20", 1200, ratio_regression},
      {8, "ill-posedness probe", 120, illposedness},
      {9, "determinism", 600, determinism},
      {10, "reduced / full-space agreement", 300, formulations_agree},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s %2d %s (%.2f s%s): %s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs,
                in_time ? "" : ", over budget", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
