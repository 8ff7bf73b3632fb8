// Reduced formulation: the interior potentials and block values are
// eliminated, leaving a bound-constrained nonlinear least-squares problem in
// the edge conductances,
//
//   min_{c >= eps}  || [ vec(N(c) - N_data) ; sqrt(mu) (c - cbar(c)) ] ||^2,
//
// solved by a projected Gauss-Newton trust-region method.

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "spider/error.hpp"
#include "spider/inverse.hpp"
#include "spider/simd.hpp"

namespace spider::detail {
namespace {

struct Linearization {
  ForwardState forward;
  ObjectiveBreakdown objective;
  Eigen::VectorXd half_gradient;  // J^T R
  Eigen::MatrixXd gauss_newton;   // J^T J
};

class ReducedProblem {
 public:
  explicit ReducedProblem(const InverseProblemSpec& spec) : spec_(spec) {}

  ObjectiveBreakdown objective(const ForwardState& fwd, const ConductanceVector& c) const {
    ObjectiveBreakdown out;
    const auto size = static_cast<std::size_t>(fwd.response.size());
    out.misfit = simd::sum_sq_diff({fwd.response.data(), size}, {spec_.data.data(), size});
    out.penalty = deviation_from_blocks(c, spec_.partition).squaredNorm();
    out.total = out.misfit + spec_.mu * out.penalty;
    return out;
  }

  Linearization linearize(const ConductanceVector& c) const {
    const SpiderTopology& topo = spec_.topology;
    const int edges = topo.edge_count();
    const int m = topo.m();
    const auto mm = static_cast<std::size_t>(m * m);

    Linearization lin;
    lin.forward = solve_forward(topo, c);
    lin.objective = objective(lin.forward, c);
    const SensitivityJacobian jac = sensitivity_jacobian(topo, lin.forward.extensions);
    const RowMatrix residual = lin.forward.response - spec_.data;

    lin.half_gradient.resize(edges);
    lin.gauss_newton.resize(edges, edges);
    for (int e = 0; e < edges; ++e) {
      const std::span<const double> row_e{jac.slices.row(e).data(), mm};
      lin.half_gradient[e] = simd::dot(row_e, {residual.data(), mm});
      for (int f = 0; f <= e; ++f) {
        const double v = simd::dot(row_e, {jac.slices.row(f).data(), mm});
        lin.gauss_newton(e, f) = v;
        lin.gauss_newton(f, e) = v;
      }
    }

    // Penalty rows sqrt(mu) (I - P), with P the block-averaging projector.
    const double mu = spec_.mu;
    lin.half_gradient += mu * deviation_from_blocks(c, spec_.partition);
    const EdgePartition& part = spec_.partition;
    for (int e = 0; e < edges; ++e) {
      lin.gauss_newton(e, e) += mu;
      const int be = part.block_of(e);
      const double inv = 1.0 / part.block_sizes()[static_cast<std::size_t>(be)];
      for (int f = 0; f < edges; ++f) {
        if (part.block_of(f) == be) lin.gauss_newton(e, f) -= mu * inv;
      }
    }
    return lin;
  }

 private:
  const InverseProblemSpec& spec_;
};

// Minimizer of g^T d + 1/2 d^T H d over ||d|| <= radius (H positive
// semidefinite), via the eigendecomposition of H and Newton iteration on the
// secular equation 1/||d(lambda)|| = 1/radius.
Eigen::VectorXd trust_region_step(const Eigen::MatrixXd& hessian, const Eigen::VectorXd& g, double radius) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian);
  const Eigen::VectorXd& lam = eig.eigenvalues();
  const Eigen::VectorXd a = eig.eigenvectors().transpose() * g;
  const double lam_max = std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
  const double floor = 1e-14 * lam_max;

  auto step_norm = [&](double shift, double* cubic) {
    double sq = 0.0;
    double cb = 0.0;
    for (int i = 0; i < lam.size(); ++i) {
      const double den = std::max(lam[i], 0.0) + shift;
      if (den <= 0.0) continue;
      sq += a[i] * a[i] / (den * den);
      cb += a[i] * a[i] / (den * den * den);
    }
    if (cubic) *cubic = cb;
    return std::sqrt(sq);
  };

  double shift = std::max(0.0, floor - lam.minCoeff());
  double norm = step_norm(shift, nullptr);
  if (norm > radius) {
    for (int it = 0; it < 100; ++it) {
      double cubic = 0.0;
      norm = step_norm(shift, &cubic);
      if (std::abs(norm - radius) <= 1e-6 * radius || cubic <= 0.0) break;
      shift += (norm - radius) / radius * (norm * norm) / cubic;
      shift = std::max(shift, 0.0);
    }
  }
  Eigen::VectorXd coeff(lam.size());
  for (int i = 0; i < lam.size(); ++i) {
    const double den = std::max(lam[i], 0.0) + shift;
    coeff[i] = den > 0.0 ? -a[i] / den : 0.0;
  }
  return eig.eigenvectors() * coeff;
}

double projected_gradient_norm(const ConductanceVector& c, const Eigen::VectorXd& grad, double lower) {
  double out = 0.0;
  for (int e = 0; e < c.size(); ++e) {
    out = std::max(out, std::abs(std::max(c[e] - grad[e], lower) - c[e]));
  }
  return out;
}

}  // namespace

RecoveryResult solve_reduced(const InverseProblemSpec& spec, const InitialGuess& start) {
  const SolverOptions& opt = spec.solver;
  const int edges = spec.topology.edge_count();
  const double lower = opt.lower_bound;
  const ReducedProblem problem(spec);

  // A zero warm start (data with no positive constant fit) would sit on the
  // bound with a singular interior block; start from unit conductance instead.
  const double c0 = start.c0 > std::max(lower, 1e-8) ? start.c0 : 1.0;
  ConductanceVector c = ConductanceVector::Constant(edges, c0);
  Linearization lin = problem.linearize(c);

  RecoveryResult result;
  result.history.push_back(lin.objective.total);
  double radius = opt.initial_radius;
  int iter = 0;
  SolveStatus status = SolveStatus::max_iterations;

  while (true) {
    const Eigen::VectorXd grad = 2.0 * lin.half_gradient;
    result.stationarity = projected_gradient_norm(c, grad, lower);
    if (result.stationarity <= opt.stationarity_tol || lin.objective.total == 0.0) {
      status = SolveStatus::converged;
      break;
    }
    const auto& hist = result.history;
    const auto window = static_cast<std::size_t>(opt.stagnation_window);
    if (hist.size() > window) {
      const double old = hist[hist.size() - 1 - window];
      if (old - hist.back() <= opt.stagnation_rel * old) {
        status = SolveStatus::converged_stagnant;
        break;
      }
    }
    if (iter >= opt.max_iterations) {
      status = SolveStatus::max_iterations;
      break;
    }
    ++iter;

    // Variables pinned at the lower bound with the gradient pushing outward
    // stay fixed for this step.
    std::vector<int> free;
    for (int e = 0; e < edges; ++e) {
      if (!(c[e] <= lower * (1.0 + 1e-12) && grad[e] > 0.0)) free.push_back(e);
    }
    const int nf = static_cast<int>(free.size());
    Eigen::MatrixXd h_free(nf, nf);
    Eigen::VectorXd g_free(nf);
    for (int i = 0; i < nf; ++i) {
      g_free[i] = lin.half_gradient[free[i]];
      for (int j = 0; j < nf; ++j) h_free(i, j) = lin.gauss_newton(free[i], free[j]);
    }

    bool accepted = false;
    while (!accepted) {
      const Eigen::VectorXd step_free = trust_region_step(h_free, g_free, radius);
      ConductanceVector trial = c;
      for (int i = 0; i < nf; ++i) trial[free[i]] = std::max(c[free[i]] + step_free[i], lower);
      const Eigen::VectorXd d = trial - c;
      const double dnorm = d.norm();
      // Model of ||R + J d||^2 - ||R||^2.
      const double predicted = -(2.0 * lin.half_gradient.dot(d) + d.dot(lin.gauss_newton * d));

      double actual = -std::numeric_limits<double>::infinity();
      ForwardState fwd;
      bool evaluated = false;
      if (predicted > 0.0) {
        try {
          fwd = solve_forward(spec.topology, trial);
          actual = lin.objective.total - problem.objective(fwd, trial).total;
          evaluated = true;
        } catch (const Error&) {
          // singular interior block: treat as a rejected step
        }
      }
      const double rho = evaluated ? actual / predicted : -1.0;
      if (rho < 0.25) {
        radius = 0.25 * std::min(radius, std::max(dnorm, 1e-300));
      } else if (rho > 0.75 && step_free.norm() >= 0.99 * radius) {
        radius *= 2.0;
      }
      if (evaluated && actual > 0.0 && rho > 1e-4) {
        c = trial;
        lin = problem.linearize(c);
        result.history.push_back(lin.objective.total);
        accepted = true;
      } else if (radius <= 1e-15 * std::max(1.0, c.norm()) || predicted <= 0.0) {
        break;
      }
    }
    if (!accepted) {
      status = SolveStatus::failed;
      result.stationarity = projected_gradient_norm(c, 2.0 * lin.half_gradient, lower);
      break;
    }
  }

  result.conductance = c;
  result.response = lin.forward.response;
  result.objective = lin.objective;
  result.iterations = iter;
  result.status = status;
  result.feasibility = 0.0;
  return result;
}

}  // namespace spider::detail
