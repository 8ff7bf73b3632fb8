// spider: forward and inverse conductance problems on well-connected spider
// networks.
//
//   spider forward  --m 7 --conductance const:1 --out N.csv
//   spider recover  --problem problem.json --out result.csv
//   spider sweep    --m 7,11 --s 1,2,3 --reps 3 --out-dir out/
//   spider ratio    --m 11 --s-max 20 --reps 10 --out-dir out/
//   spider probe    --m 3,7,11,15,19 --out-dir out/
//   spider topology --m 7 [--s 3 --seed 1]
//
// Exit codes: 0 success, 2 usage or input error, 3 solver did not converge.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spider/error.hpp"
#include "spider/forward.hpp"
#include "spider/harness.hpp"
#include "spider/inverse.hpp"
#include "spider/io.hpp"
#include "spider/simd.hpp"
#include "spider/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitSolver = 3;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw spider::Error(spider::ErrorCode::io_error, "cannot write " + path.string());
  out << text;
}

template <class Fn>
void write_with(const fs::path& path, Fn&& fn) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  fn(os);
  write_text(path, os.str());
}

spider::ConductanceVector parse_conductance(const std::string& arg, const spider::SpiderTopology& topo) {
  const std::string prefix = "const:";
  if (arg.rfind(prefix, 0) == 0) {
    const double v = spider::io::parse_double(arg.substr(prefix.size()));
    return spider::ConductanceVector::Constant(topo.edge_count(), v);
  }
  spider::ConductanceVector c = spider::io::read_vector_csv(arg);
  if (c.size() != topo.edge_count()) {
    throw spider::Error(spider::ErrorCode::dimension_mismatch,
                        "conductance file has " + std::to_string(c.size()) + " values, expected " +
                            std::to_string(topo.edge_count()));
  }
  return c;
}

struct SweepFlags {
  std::string config;
  std::vector<int> m;
  std::vector<int> s;
  int reps = 0;
  double lo = 0.0;
  double hi = 0.0;
  double mu = -1.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  double tol = 0.0;
  int max_iter = 0;
  std::string formulation;
  int threads = 0;
  std::string out_dir;
  bool svg = false;
};

void add_common_sweep_options(CLI::App* cmd, SweepFlags& f) {
  cmd->add_option("--config", f.config, "JSON sweep configuration (flags override it)");
  cmd->add_option("--reps", f.reps, "instances per cell");
  cmd->add_option("--lo", f.lo, "lower end of the conductance interval");
  cmd->add_option("--hi", f.hi, "upper end of the conductance interval");
  cmd->add_option("--mu", f.mu, "penalty parameter");
  cmd->add_option("--seed", f.seed, "root seed")->each([&f](const std::string&) { f.seed_set = true; });
  cmd->add_option("--tol", f.tol, "stationarity tolerance");
  cmd->add_option("--max-iter", f.max_iter, "solver iteration limit");
  cmd->add_option("--formulation", f.formulation, "reduced | full-space");
  cmd->add_option("--threads", f.threads, "worker threads");
  cmd->add_option("--out-dir", f.out_dir, "output directory")->required();
  cmd->add_flag("--svg", f.svg, "also write SVG plots");
}

spider::SweepConfig build_config(const SweepFlags& f) {
  spider::SweepConfig cfg;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw spider::Error(spider::ErrorCode::invalid_config, "cannot read " + f.config);
    try {
      cfg = spider::io::sweep_config_from_json(json::parse(in));
    } catch (const json::exception& e) {
      throw spider::Error(spider::ErrorCode::invalid_config, e.what());
    }
  }
  if (!f.m.empty()) cfg.m_values = f.m;
  if (!f.s.empty()) cfg.s_values = f.s;
  if (f.reps != 0) cfg.repetitions = f.reps;
  if (f.lo != 0.0) cfg.lo = f.lo;
  if (f.hi != 0.0) cfg.hi = f.hi;
  if (f.mu >= 0.0) cfg.mu = f.mu;
  if (f.seed_set) cfg.root_seed = f.seed;
  if (f.tol != 0.0) cfg.solver.stationarity_tol = f.tol;
  if (f.max_iter != 0) cfg.solver.max_iterations = f.max_iter;
  if (!f.formulation.empty()) cfg.solver.formulation = spider::parse_formulation(f.formulation);
  if (f.threads != 0) cfg.threads = f.threads;
  if (!(cfg.solver.stationarity_tol > 0.0) || cfg.solver.max_iterations < 1) {
    throw spider::Error(spider::ErrorCode::invalid_config, "solver tolerance and iteration limit must be positive");
  }
  spider::validate(cfg);
  return cfg;
}

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw spider::Error(spider::ErrorCode::io_error, "cannot create " + dir);
  return p;
}

double log10_or_nan(const std::optional<double>& v) {
  return v && *v > 0.0 ? std::log10(*v) : std::numeric_limits<double>::quiet_NaN();
}

int run_forward(int m, const std::string& conductance, const std::string& out) {
  const spider::SpiderTopology topo = spider::build_spider(m);
  const spider::ConductanceVector c = parse_conductance(conductance, topo);
  spider::io::write_matrix_csv(out, spider::response_matrix(spider::assemble_laplacian(topo, c)));
  return 0;
}

int run_recover(const std::string& problem_path, const std::string& out, const std::string& formulation) {
  spider::io::ProblemFile problem = spider::io::load_problem(problem_path);
  if (!formulation.empty()) problem.formulation = spider::parse_formulation(formulation);
  const spider::InverseProblemSpec spec = spider::io::to_spec(problem);
  const spider::RecoveryResult rec = spider::solve(spec);

  spider::InstanceResult row;
  row.m = problem.m;
  row.s = problem.s;
  row.seed = problem.seed;
  row.error = spec.ground_truth ? (rec.conductance - *spec.ground_truth).norm() : std::numeric_limits<double>::quiet_NaN();
  row.misfit = std::sqrt(rec.objective.misfit);
  row.ratio = rec.ratio;
  row.p = rec.objective.total;
  row.penalty = rec.objective.penalty;
  row.iterations = rec.iterations;
  row.status = rec.status;

  const fs::path out_path(out);
  if (out_path.has_parent_path()) prepare_dir(out_path.parent_path().string());
  write_with(out_path, [&](std::ostream& os) { spider::io::write_results_csv(os, {row}); });
  fs::path stem = out_path;
  stem.replace_extension();
  spider::io::write_matrix_csv(stem.string() + ".conductance.csv", rec.conductance);

  json detail;
  detail["status"] = std::string(spider::status_name(rec.status));
  detail["iterations"] = rec.iterations;
  detail["formulation"] = std::string(spider::formulation_name(spec.solver.formulation));
  detail["block_means"] = rec.block_means;
  detail["objective"] = {{"misfit", rec.objective.misfit}, {"penalty", rec.objective.penalty}, {"total", rec.objective.total}};
  detail["stationarity"] = rec.stationarity;
  detail["feasibility"] = rec.feasibility;
  detail["warm_start_c0"] = rec.warm_start_c0;
  detail["clamped"] = rec.clamped;
  detail["warnings"] = rec.warnings;
  detail["conductance"] = std::vector<double>(rec.conductance.data(), rec.conductance.data() + rec.conductance.size());
  if (rec.ratio) detail["ratio"] = *rec.ratio;
  write_text(stem.string() + ".json", detail.dump(2) + "\n");

  for (const std::string& w : rec.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "status " << spider::status_name(rec.status) << ", p = " << spider::io::format_double(rec.objective.total)
            << ", iterations " << rec.iterations << '\n';
  return rec.ok() ? 0 : kExitSolver;
}

int run_sweep(const SweepFlags& flags) {
  const spider::SweepConfig cfg = build_config(flags);
  const fs::path dir = prepare_dir(flags.out_dir);
  const std::vector<spider::CellResult> cells = spider::run_recovery_sweep(cfg);

  write_with(dir / "results.csv", [&](std::ostream& os) { spider::io::write_results_csv(os, spider::io::flatten(cells)); });
  write_with(dir / "summary.csv", [&](std::ostream& os) { spider::io::write_summary_csv(os, cells); });
  write_with(dir / "plot_data.csv", [&](std::ostream& os) {
    os << "m,s,log10_max_error,log10_max_ratio\n";
    for (const auto& c : cells) {
      if (c.skipped) continue;
      os << c.m << ',' << c.s << ',' << spider::io::format_double(c.max_error > 0 ? std::log10(c.max_error) : NAN) << ','
         << spider::io::format_double(log10_or_nan(c.max_ratio)) << '\n';
    }
  });
  write_text(dir / "config.json", spider::io::sweep_config_to_json(cfg).dump(2) + "\n");

  if (flags.svg) {
    std::vector<spider::svg::Series> series;
    for (int m : cfg.m_values) {
      spider::svg::Series s;
      s.label = "m = " + std::to_string(m);
      for (const auto& c : cells) {
        if (c.m == m && !c.skipped && c.max_ratio) {
          s.x.push_back(c.s);
          s.y.push_back(*c.max_ratio);
        }
      }
      series.push_back(s);
    }
    write_text(dir / "sweep_ratio.svg",
               spider::svg::render({"Maximum ||c'-c|| / ||N'-N||", "s", "max ratio", true}, series));
  }

  int failures = 0;
  for (const auto& c : cells) failures += c.failures;
  std::cout << "sweep: " << cells.size() << " cells, " << failures << " failed instances\n";
  return 0;
}

int run_ratio(int m, int s_max, SweepFlags flags) {
  spider::SweepConfig cfg = build_config(flags);
  const fs::path dir = prepare_dir(flags.out_dir);
  const spider::RatioStudy study = spider::run_ratio_vs_s(m, s_max, cfg.repetitions, cfg);

  write_with(dir / "results.csv", [&](std::ostream& os) { spider::io::write_results_csv(os, spider::io::flatten(study.cells)); });
  write_with(dir / "summary.csv", [&](std::ostream& os) { spider::io::write_summary_csv(os, study.cells); });
  write_with(dir / "plot_data.csv", [&](std::ostream& os) {
    os << "s,log10_max_error,log10_max_ratio\n";
    for (const auto& c : study.cells) {
      os << c.s << ',' << spider::io::format_double(c.max_error > 0 ? std::log10(c.max_error) : NAN) << ','
         << spider::io::format_double(log10_or_nan(c.max_ratio)) << '\n';
    }
  });
  write_with(dir / "regression.csv", [&](std::ostream& os) {
    os << "slope,intercept,r_squared,p_value,points\n";
    if (study.regression) {
      const auto& r = *study.regression;
      os << spider::io::format_double(r.slope) << ',' << spider::io::format_double(r.intercept) << ','
         << spider::io::format_double(r.r_squared) << ',' << spider::io::format_double(r.p_value) << ',' << r.points << '\n';
    }
  });

  if (flags.svg) {
    spider::svg::Series pts{"max ratio", {}, {}, false, true};
    for (const auto& c : study.cells) {
      if (c.max_ratio) {
        pts.x.push_back(c.s);
        pts.y.push_back(*c.max_ratio);
      }
    }
    std::vector<spider::svg::Series> series{pts};
    if (study.regression) {
      const auto& r = *study.regression;
      series.push_back({"regression", {1.0, double(s_max)},
                        {std::pow(10.0, r.intercept + r.slope), std::pow(10.0, r.intercept + r.slope * s_max)}, true, false});
    }
    write_text(dir / "ratio.svg",
               spider::svg::render({"Maximum ||c'-c|| / ||N'-N||, m = " + std::to_string(m), "s", "max ratio", true}, series));
    spider::svg::Series err{"max error", {}, {}, true, true};
    for (const auto& c : study.cells) {
      err.x.push_back(c.s);
      err.y.push_back(c.max_error);
    }
    write_text(dir / "error.svg",
               spider::svg::render({"Maximum ||c'-c||, m = " + std::to_string(m), "s", "max error", true}, {err}));
  }

  if (study.regression) {
    const auto& r = *study.regression;
    std::cout << "regression: slope " << spider::io::format_double(r.slope) << ", intercept "
              << spider::io::format_double(r.intercept) << ", r_squared " << spider::io::format_double(r.r_squared)
              << ", p_value " << spider::io::format_double(r.p_value) << '\n';
  } else {
    std::cout << "regression: not enough finite ratios\n";
  }
  return 0;
}

int run_probe(const std::vector<int>& ms, const std::string& out_dir, bool svg) {
  for (int m : ms) {
    if (!spider::valid_spider_m(m)) throw spider::Error(spider::ErrorCode::invalid_m, "m = " + std::to_string(m));
  }
  const fs::path dir = prepare_dir(out_dir);
  const spider::ProbeStudy study = spider::run_illposedness_probe(ms);
  write_with(dir / "probe.csv", [&](std::ostream& os) {
    os << "m,sigma_min,sigma_max,cond,log10_cond\n";
    for (const auto& r : study.rows) {
      os << r.m << ',' << spider::io::format_double(r.sigma_min) << ',' << spider::io::format_double(r.sigma_max) << ','
         << spider::io::format_double(r.cond) << ',' << spider::io::format_double(std::log10(r.cond)) << '\n';
    }
  });
  if (svg) {
    spider::svg::Series s{"cond", {}, {}, true, true};
    for (const auto& r : study.rows) {
      s.x.push_back(r.m);
      s.y.push_back(r.cond);
    }
    write_text(dir / "probe.svg",
               spider::svg::render({"Condition number of dN/dc at c = 1", "m", "cond", true}, {s}));
  }
  std::cout << "probe: sigma_min " << (study.sigma_min_decreasing ? "strictly decreasing" : "NOT monotone")
            << ", cond " << (study.cond_increasing ? "strictly increasing" : "NOT monotone") << ", span "
            << spider::io::format_double(study.cond_decades) << " decades\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Forward and inverse conductance problems on well-connected spider networks"};
  app.require_subcommand(1);
  std::string isa = "auto";
  app.add_option("--isa", isa, "kernel variant: auto | scalar | avx2 | neon");

  int fwd_m = 0;
  std::string fwd_c;
  std::string fwd_out;
  CLI::App* forward = app.add_subcommand("forward", "compute the response matrix");
  forward->add_option("--m", fwd_m, "number of radii (4*ell + 3)")->required();
  forward->add_option("--conductance", fwd_c, "CSV file with one value per edge, or const:VALUE")->required();
  forward->add_option("--out", fwd_out, "output matrix CSV")->required();

  std::string rec_problem;
  std::string rec_out;
  std::string rec_form;
  CLI::App* recover = app.add_subcommand("recover", "recover conductances from a problem file");
  recover->add_option("--problem", rec_problem, "problem JSON")->required();
  recover->add_option("--out", rec_out, "result CSV; .conductance.csv and .json are written alongside")->required();
  recover->add_option("--formulation", rec_form, "override: reduced | full-space");

  SweepFlags sweep_flags;
  CLI::App* sweep = app.add_subcommand("sweep", "recovery sweep over (m, s)");
  sweep->add_option("--m", sweep_flags.m, "radii counts")->delimiter(',');
  sweep->add_option("--s", sweep_flags.s, "block counts")->delimiter(',');
  add_common_sweep_options(sweep, sweep_flags);

  SweepFlags ratio_flags;
  int ratio_m = 11;
  int ratio_smax = 20;
  CLI::App* ratio = app.add_subcommand("ratio", "ratio ||c'-c||/||N'-N|| against s with regression");
  ratio->add_option("--m", ratio_m, "radii count");
  ratio->add_option("--s-max", ratio_smax, "largest block count");
  add_common_sweep_options(ratio, ratio_flags);

  std::vector<int> probe_m{3, 7, 11, 15, 19};
  std::string probe_out;
  bool probe_svg = false;
  CLI::App* probe = app.add_subcommand("probe", "conditioning of the forward Jacobian against m");
  probe->add_option("--m", probe_m, "radii counts")->delimiter(',');
  probe->add_option("--out-dir", probe_out, "output directory")->required();
  probe->add_flag("--svg", probe_svg, "also write an SVG plot");

  int topo_m = 0;
  int topo_s = 0;
  std::uint64_t topo_seed = 0;
  CLI::App* topology = app.add_subcommand("topology", "print the spider (and optionally a random partition) as JSON");
  topology->add_option("--m", topo_m, "radii count")->required();
  topology->add_option("--s", topo_s, "block count for a random partition");
  topology->add_option("--seed", topo_seed, "partition seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (isa != "auto") spider::simd::set_isa(spider::simd::parse_isa(isa));
    if (*forward) return run_forward(fwd_m, fwd_c, fwd_out);
    if (*recover) return run_recover(rec_problem, rec_out, rec_form);
    if (*sweep) return run_sweep(sweep_flags);
    if (*ratio) {
      ratio_flags.m.clear();
      return run_ratio(ratio_m, ratio_smax, ratio_flags);
    }
    if (*probe) return run_probe(probe_m, probe_out, probe_svg);
    if (*topology) {
      const spider::SpiderTopology topo = spider::build_spider(topo_m);
      json doc = spider::io::topology_to_json(topo);
      if (topo_s > 0) doc["partition"] = spider::io::partition_to_json(spider::random_partition(topo, topo_s, topo_seed));
      std::cout << doc.dump(2) << '\n';
      return 0;
    }
  } catch (const spider::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitInput;
}
