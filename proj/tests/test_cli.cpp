#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "spider/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kTmp{SPIDER_TEST_TMP};

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + SPIDER_CLI_PATH + "\" " + args + " > \"" + (kTmp / "stdout.txt").string() +
                          "\" 2> \"" + (kTmp / "stderr.txt").string() + "\"";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TmpDir {
  TmpDir() { fs::create_directories(kTmp); }
};

}  // namespace

TEST_CASE("forward on the m = 3 star") {
  TmpDir tmp;
  const fs::path out = kTmp / "n3.csv";
  REQUIRE(run("forward --m 3 --conductance const:1 --out \"" + out.string() + "\"") == 0);
  const Eigen::MatrixXd n = spider::io::read_matrix_csv(out);
  REQUIRE(n.rows() == 3);
  CHECK(n(0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(n(0, 1) == doctest::Approx(-1.0 / 3.0));
}

TEST_CASE("invalid input exits with status 2") {
  TmpDir tmp;
  CHECK(run("forward --m 5 --conductance const:1 --out \"" + (kTmp / "x.csv").string() + "\"") == 2);
  CHECK(slurp(kTmp / "stderr.txt").find("invalid-m") != std::string::npos);
  CHECK(run("forward --m 7 --conductance const:-1 --out \"" + (kTmp / "x.csv").string() + "\"") == 2);
  CHECK(run("ratio --m 11 --s-max 56 --reps 1 --out-dir \"" + (kTmp / "bad").string() + "\"") == 2);
  CHECK(run("nosuchcommand") == 2);
  CHECK(run("--isa sse9 probe --m 3 --out-dir \"" + (kTmp / "probe_bad").string() + "\"") == 2);
}

TEST_CASE("forward then recover") {
  TmpDir tmp;
  // piecewise-constant conductance on m = 7, two blocks: radial edges and circular edges
  std::vector<double> c(21);
  std::vector<int> blocks(21);
  for (int e = 0; e < 21; ++e) {
    c[static_cast<std::size_t>(e)] = e < 14 ? 3.0 : 40.0;
    blocks[static_cast<std::size_t>(e)] = e < 14 ? 1 : 2;
  }
  {
    std::ofstream f(kTmp / "c7.csv");
    for (double v : c) f << v << '\n';
  }
  REQUIRE(run("forward --m 7 --conductance \"" + (kTmp / "c7.csv").string() + "\" --out \"" + (kTmp / "n7.csv").string() +
              "\"") == 0);
  const nlohmann::json problem = {{"version", 1},
                                  {"m", 7},
                                  {"partition", {{"s", 2}, {"block_of", blocks}}},
                                  {"conductance", c},
                                  {"response_matrix", "n7.csv"},
                                  {"mu", 1.0}};
  {
    std::ofstream f(kTmp / "p7.json");
    f << problem.dump(2);
  }
  for (const char* form : {"reduced", "full-space"}) {
    CAPTURE(form);
    const fs::path out = kTmp / (std::string("rec_") + form + ".csv");
    REQUIRE(run("recover --problem \"" + (kTmp / "p7.json").string() + "\" --out \"" + out.string() +
                "\" --formulation " + form) == 0);
    std::ifstream in(out);
    const auto rows = spider::io::read_results_csv(in);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].ok());
    CHECK(rows[0].error <= 1e-6);
    fs::path stem = out;
    stem.replace_extension();
    const Eigen::VectorXd rc = spider::io::read_vector_csv(stem.string() + ".conductance.csv");
    REQUIRE(rc.size() == 21);
    CHECK(rc[0] == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(rc[20] == doctest::Approx(40.0).epsilon(1e-6));
    const auto detail = nlohmann::json::parse(slurp(stem.string() + ".json"));
    CHECK(detail["status"] == "converged");
    CHECK(detail["block_means"].size() == 2);
  }
}

TEST_CASE("sweep output is byte-identical across runs and thread counts") {
  TmpDir tmp;
  const std::string args = "sweep --m 3,7 --s 1,2,4 --reps 2 --seed 5";
  REQUIRE(run(args + " --out-dir \"" + (kTmp / "sw1").string() + "\"") == 0);
  REQUIRE(run(args + " --threads 2 --svg --out-dir \"" + (kTmp / "sw2").string() + "\"") == 0);
  for (const char* name : {"results.csv", "summary.csv", "plot_data.csv"}) {
    CAPTURE(name);
    const std::string a = slurp(kTmp / "sw1" / name);
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(kTmp / "sw2" / name));
  }
  CHECK(slurp(kTmp / "sw1" / "results.csv").rfind(spider::io::kResultHeader, 0) == 0);
  CHECK(fs::exists(kTmp / "sw2" / "sweep_ratio.svg"));
  CHECK(slurp(kTmp / "sw2" / "sweep_ratio.svg").find("<svg") != std::string::npos);
}

TEST_CASE("ratio study prints the regression") {
  TmpDir tmp;
  REQUIRE(run("ratio --m 7 --s-max 5 --reps 2 --svg --out-dir \"" + (kTmp / "ratio").string() + "\"") == 0);
  CHECK(slurp(kTmp / "stdout.txt").find("regression: slope") != std::string::npos);
  CHECK(fs::exists(kTmp / "ratio" / "regression.csv"));
  CHECK(fs::exists(kTmp / "ratio" / "ratio.svg"));
}

TEST_CASE("probe and topology") {
  TmpDir tmp;
  REQUIRE(run("--isa scalar probe --m 3,7,11 --out-dir \"" + (kTmp / "probe").string() + "\"") == 0);
  CHECK(slurp(kTmp / "stdout.txt").find("strictly increasing") != std::string::npos);
  std::ifstream in(kTmp / "probe" / "probe.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "m,sigma_min,sigma_max,cond,log10_cond");
  REQUIRE(run("topology --m 7 --s 3 --seed 1") == 0);
  const auto doc = nlohmann::json::parse(slurp(kTmp / "stdout.txt"));
  CHECK(doc.contains("edges"));
}
