#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "spider/error.hpp"
#include "spider/inverse.hpp"

using namespace spider;

namespace {

double max_abs(const Eigen::MatrixXd& a) { return a.cwiseAbs().maxCoeff(); }

InverseProblemSpec make_spec(int m, int s, double mu, std::uint64_t seed, Formulation f = Formulation::reduced) {
  const SpiderTopology t = build_spider(m);
  const EdgePartition p = random_partition(t, s, seed);
  const PiecewiseConductance pc = sample_pc_conductance(p, 1.0, 100.0, seed + 1);
  InverseProblemSpec spec{t, p, oracle::kron_response(t, pc.conductance), mu, {}, seed, pc.conductance};
  spec.solver.formulation = f;
  return spec;
}

}  // namespace

TEST_CASE("block means and deviations") {
  const EdgePartition p(2, {0, 1, 0, 1, 1});
  Eigen::VectorXd c(5);
  c << 1, 2, 3, 4, 6;
  const auto means = block_means(c, p);
  CHECK(means[0] == 2.0);
  CHECK(means[1] == 4.0);
  const Eigen::VectorXd d = deviation_from_blocks(c, p);
  CHECK(d[0] == -1.0);
  CHECK(d[4] == 2.0);
  // orthogonal projection: idempotent
  CHECK(max_abs(deviation_from_blocks(d, p) - d) <= 1e-15);
}

TEST_CASE("problem size") {
  const SpiderTopology t = build_spider(7);
  CHECK(full_space_variable_count(t) == 77);
  CHECK(constraint_count(t) == 56);
  for (int m : {3, 11, 15}) {
    const SpiderTopology tm = build_spider(m);
    CHECK(full_space_variable_count(tm) == m * (m * m - m + 2) / 4);
  }
}

TEST_CASE("objectives") {
  const SpiderTopology t = build_spider(7);
  const EdgePartition p = random_partition(t, 3, 5);
  const PiecewiseConductance pc = sample_pc_conductance(p, 1.0, 100.0, 6);
  const ResponseMatrix data = oracle::kron_response(t, pc.conductance);

  SUBCASE("zero at the truth") {
    const Eigen::MatrixXd v = oracle::harmonic_ld(t, pc.conductance);
    const FullObjective fo = full_objective(t, pc.conductance, v, data, p, 1.0);
    CHECK(fo.objective.total <= 1e-18 * data.squaredNorm());
    CHECK(fo.objective.penalty <= 1e-24);
    CHECK(max_abs(fo.constraint_residuals) <= 1e-10 * pc.conductance.maxCoeff());
    CHECK(reduced_objective(t, pc.conductance, data, p, 1.0).total <= 1e-18 * data.squaredNorm());
  }
  SUBCASE("full objective at harmonic voltages equals the reduced objective") {
    const Eigen::VectorXd c = oracle::random_conductance(t, 44);
    const Eigen::MatrixXd v = oracle::harmonic_ld(t, c);
    const FullObjective fo = full_objective(t, c, v, data, p, 0.7);
    const ObjectiveBreakdown ro = reduced_objective(t, c, data, p, 0.7);
    CHECK(fo.objective.total == doctest::Approx(ro.total).epsilon(1e-10));
    CHECK(fo.objective.penalty == doctest::Approx(ro.penalty).epsilon(1e-12));
    // independent penalty
    const auto means = block_means(c, p);
    double pen = 0.0;
    for (int e = 0; e < t.edge_count(); ++e) pen += std::pow(c[e] - means[static_cast<std::size_t>(p.block_of(e))], 2);
    CHECK(ro.penalty == doctest::Approx(pen).epsilon(1e-12));
    CHECK(ro.total == doctest::Approx(ro.misfit + 0.7 * ro.penalty));
  }
  SUBCASE("gradient matches finite differences") {
    const Eigen::VectorXd c = oracle::random_conductance(t, 45);
    const Eigen::VectorXd g = objective_gradient(t, c, data, p, 0.5);
    const auto f = [&](const Eigen::VectorXd& x) { return reduced_objective(t, x, data, p, 0.5).total; };
    for (int e = 0; e < t.edge_count(); ++e) {
      const double fd = oracle::central_difference(f, c, e, 1e-6 * std::max(1.0, c[e]));
      CHECK(std::abs(fd - g[e]) <= 1e-5 * std::max(1.0, g.cwiseAbs().maxCoeff()));
    }
  }
  SUBCASE("size mismatches") {
    CHECK_THROWS_AS(reduced_objective(t, Eigen::VectorXd::Ones(20), data, p, 1.0), Error);
    CHECK_THROWS_AS(reduced_objective(t, pc.conductance, ResponseMatrix::Zero(3, 3), p, 1.0), Error);
    CHECK_THROWS_AS(full_objective(t, pc.conductance, Eigen::MatrixXd::Zero(3, 7), data, p, 1.0), Error);
  }
}

TEST_CASE("Lipschitz ratio") {
  Eigen::VectorXd a(2), b(2);
  a << 3, 4;
  b << 0, 0;
  ResponseMatrix n1(1, 1), n2(1, 1);
  n1 << 2.0;
  n2 << 0.0;
  CHECK(*lipschitz_ratio(a, b, n1, n2) == doctest::Approx(2.5));
  CHECK_FALSE(lipschitz_ratio(a, b, n2, n2).has_value());
}

TEST_CASE("formulation and status names") {
  CHECK(parse_formulation("reduced") == Formulation::reduced);
  CHECK(parse_formulation("full-space") == Formulation::full_space);
  CHECK_THROWS_AS(parse_formulation("newton"), Error);
  CHECK(status_name(SolveStatus::converged_stagnant) == "converged-stagnant");
  CHECK(status_name(SolveStatus::max_iterations) == "max-iter");
}

TEST_CASE("recovery on small instances") {
  for (Formulation f : {Formulation::reduced, Formulation::full_space}) {
    CAPTURE(formulation_name(f));
    SUBCASE("m = 7, s = 3, mu = 1") {
      const InverseProblemSpec spec = make_spec(7, 3, 1.0, 17, f);
      const RecoveryResult r = solve(spec);
      REQUIRE(r.ok());
      CHECK((r.conductance - *spec.ground_truth).norm() <= 1e-6 * spec.ground_truth->norm());
      CHECK(r.objective.total <= 1e-12);
      CHECK(r.ratio.has_value());
      CHECK(r.block_means.size() == 3);
      CHECK(r.warnings.empty());
      // merit history never increases
      for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1] * (1.0 + 1e-12) + 1e-300);
    }
    SUBCASE("m = 3 star without penalty") {
      const InverseProblemSpec spec = make_spec(3, 3, 0.0, 23, f);
      const RecoveryResult r = solve(spec);
      REQUIRE(r.ok());
      CHECK((r.conductance - *spec.ground_truth).cwiseAbs().maxCoeff() <= 1e-6 * spec.ground_truth->maxCoeff());
    }
    SUBCASE("constant network, one block") {
      const SpiderTopology t = build_spider(11);
      const Eigen::VectorXd c = Eigen::VectorXd::Constant(t.edge_count(), 7.0);
      InverseProblemSpec spec{t, EdgePartition::single_block(t.edge_count()), oracle::kron_response(t, c), 1.0, {}, 0, c};
      spec.solver.formulation = f;
      const RecoveryResult r = solve(spec);
      REQUIRE(r.ok());
      CHECK(r.warm_start_c0 == doctest::Approx(7.0).epsilon(1e-10));
      CHECK((r.conductance.array() - 7.0).abs().maxCoeff() <= 1e-6);
    }
  }
}

TEST_CASE("reduced and full-space formulations agree") {
  const InverseProblemSpec a = make_spec(7, 4, 1.0, 91, Formulation::reduced);
  const InverseProblemSpec b = make_spec(7, 4, 1.0, 91, Formulation::full_space);
  const RecoveryResult ra = solve(a);
  const RecoveryResult rb = solve(b);
  REQUIRE(ra.ok());
  REQUIRE(rb.ok());
  CHECK((ra.conductance - rb.conductance).cwiseAbs().maxCoeff() <= 1e-6 * a.ground_truth->maxCoeff());
  CHECK(rb.feasibility <= 1e-8 * a.ground_truth->maxCoeff());
}

TEST_CASE("the recovered response satisfies the interior balance") {
  const InverseProblemSpec spec = make_spec(11, 5, 1.0, 101);
  const RecoveryResult r = solve(spec);
  REQUIRE(r.ok());
  // response from the recovered conductance computed independently
  const Eigen::MatrixXd ref = oracle::kron_response(spec.topology, r.conductance);
  CHECK(max_abs(r.response - ref) <= 1e-9 * max_abs(ref));
}

TEST_CASE("noisy data still terminates with a stationary point") {
  InverseProblemSpec spec = make_spec(7, 2, 1.0, 55);
  Rng rng(3);
  ResponseMatrix noise(7, 7);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j <= i; ++j) noise(i, j) = noise(j, i) = rng.uniform(-1e-3, 1e-3);
  spec.data += noise;
  const RecoveryResult r = solve(spec);
  CHECK(r.ok());
  CHECK(r.objective.total <= noise.squaredNorm());
  CHECK_FALSE(r.warnings.empty());  // rows no longer sum to zero
}

TEST_CASE("solver configuration and status reporting") {
  SUBCASE("invalid config") {
    InverseProblemSpec spec = make_spec(7, 2, -1.0, 3);
    CHECK_THROWS_AS(solve(spec), Error);
    spec.mu = 1.0;
    spec.solver.stationarity_tol = 0.0;
    CHECK_THROWS_AS(solve(spec), Error);
  }
  SUBCASE("iteration budget") {
    InverseProblemSpec spec = make_spec(11, 8, 1.0, 3);
    spec.solver.max_iterations = 1;
    const RecoveryResult r = solve(spec);
    CHECK(r.status == SolveStatus::max_iterations);
    CHECK_FALSE(r.ok());
    CHECK(r.iterations == 1);
  }
  SUBCASE("dimension mismatch") {
    InverseProblemSpec spec = make_spec(7, 2, 1.0, 3);
    spec.data = ResponseMatrix::Zero(3, 3);
    CHECK_THROWS_AS(solve(spec), Error);
  }
  SUBCASE("asymmetric data warns") {
    InverseProblemSpec spec = make_spec(7, 2, 1.0, 3);
    spec.data(0, 1) += 1e-3;
    const RecoveryResult r = solve(spec);
    bool found = false;
    for (const auto& w : r.warnings) found |= w.find("symmetric") != std::string::npos;
    CHECK(found);
  }
}

TEST_CASE("full-space gradient matches finite differences") {
  const SpiderTopology t = build_spider(7);
  const EdgePartition p = random_partition(t, 3, 8);
  const ResponseMatrix data = oracle::kron_response(t, sample_pc_conductance(p, 1.0, 100.0, 9).conductance);
  const Eigen::VectorXd c = oracle::random_conductance(t, 10);
  Eigen::MatrixXd w = oracle::harmonic_ld(t, oracle::random_conductance(t, 11));
  const Eigen::VectorXd g = full_objective_gradient(t, c, w, data, p, 0.8);
  REQUIRE(g.size() == full_space_variable_count(t));
  const int ne = t.edge_count();
  Eigen::VectorXd x(g.size());
  x.head(ne) = c;
  for (int i = 0; i < w.rows(); ++i)
    for (int k = 0; k < 7; ++k) x[ne + i * 7 + k] = w(i, k);
  const auto f = [&](const Eigen::VectorXd& y) {
    Eigen::MatrixXd wy(w.rows(), 7);
    for (int i = 0; i < w.rows(); ++i)
      for (int k = 0; k < 7; ++k) wy(i, k) = y[ne + i * 7 + k];
    return full_objective(t, y.head(ne), wy, data, p, 0.8).objective.total;
  };
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  for (int j = 0; j < x.size(); ++j) {
    const double fd = oracle::central_difference(f, x, j, 1e-6 * std::max(1.0, std::abs(x[j])));
    CHECK(std::abs(fd - g[j]) <= 1e-5 * scale);
  }
}
