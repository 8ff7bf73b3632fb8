// Full-space formulation: conductances and interior potentials are both
// unknowns, with the interior current balance g(c, V) = 0 as equality
// constraints. Gauss-Newton SQP with an l1 merit function, Levenberg-Marquardt
// damping driven by the actual/predicted merit decrease, and a second-order
// correction.

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "spider/error.hpp"
#include "spider/inverse.hpp"

namespace spider::detail {
namespace {

// Variable layout: x = [c (|E|); W row-major over (interior vertex, t)].
class FullSpaceProblem {
 public:
  explicit FullSpaceProblem(const InverseProblemSpec& spec)
      : spec_(spec),
        topo_(spec.topology),
        m_(topo_.m()),
        edges_(topo_.edge_count()),
        interior_(topo_.interior_count()),
        nvar_(edges_ + interior_ * m_),
        nres_(m_ * m_ + edges_),
        ncon_(interior_ * m_),
        sqrt_mu_(std::sqrt(spec.mu)) {}

  int variables() const { return nvar_; }
  int constraints() const { return ncon_; }
  int edges() const { return edges_; }

  Eigen::VectorXd pack(const ConductanceVector& c, const HarmonicExtensionSet& ext) const {
    Eigen::VectorXd x(nvar_);
    x.head(edges_) = c;
    for (int i = 0; i < interior_; ++i) {
      for (int t = 0; t < m_; ++t) x[voltage_index(m_ + i, t)] = ext.values(m_ + i, t);
    }
    return x;
  }

  Eigen::MatrixXd interior_voltages(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd w(interior_, m_);
    for (int i = 0; i < interior_; ++i) {
      for (int t = 0; t < m_; ++t) w(i, t) = x[voltage_index(m_ + i, t)];
    }
    return w;
  }

  // Residuals r = [vec(N' - N) ; sqrt(mu)(c - cbar)] and constraints g.
  void evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::VectorXd& g) const {
    Eigen::MatrixXd currents = Eigen::MatrixXd::Zero(topo_.n(), m_);
    for (const Edge& e : topo_.edges()) {
      for (int t = 0; t < m_; ++t) {
        const double flow = x[e.id] * (potential(x, e.u, t) - potential(x, e.v, t));
        currents(e.u, t) += flow;
        currents(e.v, t) -= flow;
      }
    }
    r.resize(nres_);
    for (int j = 0; j < m_; ++j) {
      for (int t = 0; t < m_; ++t) r[j * m_ + t] = currents(j, t) - spec_.data(j, t);
    }
    r.tail(edges_) = sqrt_mu_ * deviation_from_blocks(x.head(edges_), spec_.partition);
    g.resize(ncon_);
    for (int i = 0; i < interior_; ++i) {
      for (int t = 0; t < m_; ++t) g[i * m_ + t] = currents(m_ + i, t);
    }
  }

  void jacobians(const Eigen::VectorXd& x, Eigen::MatrixXd& jr, Eigen::MatrixXd& jg) const {
    jr = Eigen::MatrixXd::Zero(nres_, nvar_);
    jg = Eigen::MatrixXd::Zero(ncon_, nvar_);
    auto row_of = [&](int vertex, int t, Eigen::MatrixXd*& mat) {
      if (vertex < m_) {
        mat = &jr;
        return vertex * m_ + t;
      }
      mat = &jg;
      return (vertex - m_) * m_ + t;
    };
    for (const Edge& e : topo_.edges()) {
      const double w = x[e.id];
      for (int t = 0; t < m_; ++t) {
        const double diff = potential(x, e.u, t) - potential(x, e.v, t);
        // current leaving u along e: w (v_u - v_v); leaving v: -w (v_u - v_v)
        for (int side = 0; side < 2; ++side) {
          const int here = side == 0 ? e.u : e.v;
          const int there = side == 0 ? e.v : e.u;
          const double sign = side == 0 ? 1.0 : -1.0;
          Eigen::MatrixXd* mat = nullptr;
          const int row = row_of(here, t, mat);
          (*mat)(row, e.id) += sign * diff;
          if (here >= m_) (*mat)(row, voltage_index(here, t)) += w;
          if (there >= m_) (*mat)(row, voltage_index(there, t)) -= w;
        }
      }
    }
    const EdgePartition& part = spec_.partition;
    for (int e = 0; e < edges_; ++e) {
      const int be = part.block_of(e);
      const double inv = 1.0 / part.block_sizes()[static_cast<std::size_t>(be)];
      for (int f = 0; f < edges_; ++f) {
        double v = (e == f ? 1.0 : 0.0) - (part.block_of(f) == be ? inv : 0.0);
        jr(m_ * m_ + e, f) = sqrt_mu_ * v;
      }
    }
  }

  int voltage_index(int vertex, int t) const { return edges_ + (vertex - m_) * m_ + t; }

 private:
  double potential(const Eigen::VectorXd& x, int vertex, int t) const {
    if (vertex < m_) return vertex == t ? 1.0 : 0.0;
    return x[voltage_index(vertex, t)];
  }

  const InverseProblemSpec& spec_;
  const SpiderTopology& topo_;
  int m_;
  int edges_;
  int interior_;
  int nvar_;
  int nres_;
  int ncon_;
  double sqrt_mu_;
};

struct Iterate {
  Eigen::VectorXd x;
  Eigen::VectorXd r;
  Eigen::VectorXd g;
  double f = 0.0;

  double merit(double rho) const { return f + rho * g.lpNorm<1>(); }
};

}  // namespace

RecoveryResult solve_full_space(const InverseProblemSpec& spec, const InitialGuess& start) {
  const SolverOptions& opt = spec.solver;
  const FullSpaceProblem problem(spec);
  const int nv = problem.variables();
  const int nc = problem.constraints();
  const int ne = problem.edges();
  const double lower = opt.lower_bound;

  auto make_iterate = [&](Eigen::VectorXd x) {
    Iterate it;
    it.x = std::move(x);
    problem.evaluate(it.x, it.r, it.g);
    it.f = it.r.squaredNorm();
    return it;
  };

  const double c0 = start.c0 > std::max(lower, 1e-8) ? start.c0 : 1.0;
  Iterate cur = make_iterate(problem.pack(ConductanceVector::Constant(ne, c0), start.voltages));

  RecoveryResult result;
  double rho = 1.0;
  double damping = 1e-3;
  double growth = 2.0;
  result.history.push_back(cur.merit(rho));
  SolveStatus status = SolveStatus::max_iterations;
  int iter = 0;

  double last_step = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd jr;
  Eigen::MatrixXd jg;
  while (true) {
    problem.jacobians(cur.x, jr, jg);
    const Eigen::VectorXd grad = 2.0 * jr.transpose() * cur.r;

    // Least-squares multipliers for the KKT residual.
    const Eigen::MatrixXd aat = jg * jg.transpose();
    const Eigen::VectorXd y_ls = -Eigen::LLT<Eigen::MatrixXd>(aat).solve(jg * grad);
    result.stationarity = (grad + jg.transpose() * y_ls).lpNorm<Eigen::Infinity>();
    result.feasibility = cur.g.lpNorm<Eigen::Infinity>();
    // The KKT residual alone is a weak test here: the reduced Hessian is badly
    // conditioned, so also require the last step to be negligible.
    const double step_tol = opt.stationarity_tol * std::max(1.0, cur.x.head(ne).lpNorm<Eigen::Infinity>());
    if (result.stationarity <= opt.stationarity_tol && result.feasibility <= opt.feasibility_tol &&
        last_step <= step_tol) {
      status = SolveStatus::converged;
      break;
    }
    const auto& hist = result.history;
    const auto window = static_cast<std::size_t>(opt.stagnation_window);
    if (hist.size() > window && result.feasibility <= opt.feasibility_tol) {
      const double old = hist[hist.size() - 1 - window];
      if (old - hist.back() <= opt.stagnation_rel * old) {
        status = SolveStatus::converged_stagnant;
        break;
      }
    }
    if (iter >= opt.max_iterations) break;
    ++iter;

    const Eigen::MatrixXd hess = 2.0 * jr.transpose() * jr;
    const double scale = std::max(hess.diagonal().maxCoeff(), 1e-300);
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nv + nc, nv + nc);
    kkt.topLeftCorner(nv, nv) = hess;
    kkt.topLeftCorner(nv, nv).diagonal().array() += damping * scale + 1e-14 * scale;
    kkt.topRightCorner(nv, nc) = jg.transpose();
    kkt.bottomLeftCorner(nc, nv) = jg;
    Eigen::VectorXd rhs(nv + nc);
    rhs.head(nv) = -grad;
    rhs.tail(nc) = -cur.g;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd d = sol.head(nv);
    const Eigen::VectorXd y = sol.tail(nc);
    if (!d.allFinite()) {
      status = SolveStatus::failed;
      break;
    }

    const double gnorm1 = cur.g.lpNorm<1>();
    const double curvature = d.dot(hess * d);
    if (gnorm1 > 0.0) {
      const double needed = (grad.dot(d) + 0.5 * curvature) / (0.5 * gnorm1);
      rho = std::max({rho, 1.1 * y.lpNorm<Eigen::Infinity>(), needed});
    }
    const double phi0 = cur.merit(rho);

    // Fraction to the boundary on the conductances.
    double alpha = 1.0;
    for (int e = 0; e < ne; ++e) {
      if (d[e] < 0.0) alpha = std::min(alpha, 0.995 * (cur.x[e] - lower) / -d[e]);
    }
    alpha = std::max(alpha, 0.0);
    // Decrease of the merit model: quadratic objective, linearized constraints.
    const double predicted = -(alpha * grad.dot(d) + 0.5 * alpha * alpha * curvature) + rho * alpha * gnorm1;

    Iterate trial;
    double ratio = -1.0;
    if (alpha > 0.0 && predicted > 0.0) {
      trial = make_iterate(cur.x + alpha * d);
      ratio = (phi0 - trial.merit(rho)) / predicted;
      if (ratio < 1e-4 && alpha == 1.0) {
        // Second-order correction: pull the full step back onto the
        // linearized constraint manifold.
        const Eigen::VectorXd corr = -jg.transpose() * Eigen::LLT<Eigen::MatrixXd>(aat).solve(trial.g);
        Eigen::VectorXd xs = cur.x + d + corr;
        if ((xs.head(ne).array() >= lower).all()) {
          Iterate soc = make_iterate(std::move(xs));
          const double soc_ratio = (phi0 - soc.merit(rho)) / predicted;
          if (soc_ratio > ratio) {
            trial = std::move(soc);
            ratio = soc_ratio;
          }
        }
      }
    }
    if (alpha > 0.0 && result.feasibility <= opt.feasibility_tol && trial.g.size() == nc &&
        trial.g.lpNorm<Eigen::Infinity>() <= opt.feasibility_tol) {
      // Both points are feasible to tolerance; the constraint part of the
      // merit is round-off there, so judge the step on the objective alone.
      const double predicted_f = -(alpha * grad.dot(d) + 0.5 * alpha * alpha * curvature);
      ratio = predicted_f > 0.0 ? (cur.f - trial.f) / predicted_f : -1.0;
    }
    if (!(ratio >= 1e-4)) {
      // Levenberg-Marquardt: shorten the step and retry.
      if (damping < 1e8) {
        damping = damping == 0.0 ? 1e-6 : damping * growth;
        growth *= 2.0;
        continue;
      }
      status = SolveStatus::failed;
      break;
    }
    const double q = 2.0 * std::min(ratio, 1.0) - 1.0;
    damping *= std::max(1.0 / 3.0, 1.0 - q * q * q);
    if (damping < 1e-12) damping = 0.0;
    growth = 2.0;
    last_step = (trial.x - cur.x).head(ne).lpNorm<Eigen::Infinity>();
    cur = std::move(trial);
    result.history.push_back(cur.merit(rho));
  }

  result.conductance = cur.x.head(ne);
  const FullObjective fo = full_objective(spec.topology, result.conductance, problem.interior_voltages(cur.x),
                                          spec.data, spec.partition, spec.mu);
  result.response = fo.response;
  result.objective = fo.objective;
  result.feasibility = cur.g.lpNorm<Eigen::Infinity>();
  result.iterations = iter;
  result.status = status;
  return result;
}

}  // namespace spider::detail

namespace spider {

Eigen::VectorXd full_objective_gradient(const SpiderTopology& topology, const ConductanceVector& c,
                                        const Eigen::MatrixXd& interior_voltages, const ResponseMatrix& data,
                                        const EdgePartition& partition, double mu) {
  // full_objective does the size checks.
  full_objective(topology, c, interior_voltages, data, partition, mu);
  const InverseProblemSpec spec{topology, partition, data, mu, {}, 0, {}};
  const detail::FullSpaceProblem problem(spec);
  Eigen::VectorXd x(problem.variables());
  x.head(problem.edges()) = c;
  for (int i = 0; i < interior_voltages.rows(); ++i) {
    for (int t = 0; t < topology.m(); ++t) x[problem.voltage_index(topology.m() + i, t)] = interior_voltages(i, t);
  }
  Eigen::VectorXd r, g;
  problem.evaluate(x, r, g);
  Eigen::MatrixXd jr, jg;
  problem.jacobians(x, jr, jg);
  return 2.0 * jr.transpose() * r;
}

}  // namespace spider
