#include "spider/forward.hpp"

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include "spider/error.hpp"
#include "spider/simd.hpp"

namespace spider {

LaplacianMatrix assemble_laplacian(const SpiderTopology& topology, const ConductanceVector& c) {
  if (c.size() != topology.edge_count()) {
    throw Error(ErrorCode::dimension_mismatch, "conductance has " + std::to_string(c.size()) + " entries, expected " +
                                                   std::to_string(topology.edge_count()));
  }
  LaplacianMatrix lap;
  lap.m = topology.m();
  lap.full = Eigen::MatrixXd::Zero(topology.n(), topology.n());
  for (const Edge& e : topology.edges()) {
    const double w = c[e.id];
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::nonpositive_conductance, "edge " + std::to_string(e.id) + " has conductance " +
                                                          std::to_string(w));
    }
    lap.full(e.u, e.v) -= w;
    lap.full(e.v, e.u) -= w;
    lap.full(e.u, e.u) += w;
    lap.full(e.v, e.v) += w;
  }
  return lap;
}

namespace {

Eigen::LLT<Eigen::MatrixXd> factor_interior(const LaplacianMatrix& laplacian) {
  Eigen::LLT<Eigen::MatrixXd> llt(laplacian.interior_block());
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::singular_interior_block, "L(F;F) is not positive definite");
  }
  return llt;
}

HarmonicExtensionSet extend(const LaplacianMatrix& laplacian, const Eigen::LLT<Eigen::MatrixXd>& llt) {
  const int m = laplacian.m;
  const int n = laplacian.n();
  HarmonicExtensionSet ext;
  ext.values.resize(n, m);
  ext.values.topRows(m).setIdentity();
  ext.values.bottomRows(n - m) = -llt.solve(Eigen::MatrixXd(laplacian.coupling_block().transpose()));
  return ext;
}

}  // namespace

HarmonicExtensionSet harmonic_extensions(const LaplacianMatrix& laplacian) {
  return extend(laplacian, factor_interior(laplacian));
}

ResponseMatrix response_from_extensions(const LaplacianMatrix& laplacian, const HarmonicExtensionSet& ext) {
  ResponseMatrix n = laplacian.boundary_block() + laplacian.coupling_block() * ext.interior();
  return 0.5 * (n + n.transpose());
}

ResponseMatrix response_matrix(const LaplacianMatrix& laplacian) {
  return response_from_extensions(laplacian, harmonic_extensions(laplacian));
}

ForwardState solve_forward(const SpiderTopology& topology, const ConductanceVector& c) {
  ForwardState state;
  state.laplacian = assemble_laplacian(topology, c);
  state.extensions = harmonic_extensions(state.laplacian);
  state.response = response_from_extensions(state.laplacian, state.extensions);
  return state;
}

SensitivityJacobian sensitivity_jacobian(const SpiderTopology& topology, const HarmonicExtensionSet& ext) {
  const int m = ext.m();
  SensitivityJacobian jac;
  jac.m = m;
  jac.slices.resize(topology.edge_count(), m * m);
  std::vector<double> diff(static_cast<std::size_t>(m));
  const auto mm = static_cast<std::size_t>(m);
  for (const Edge& e : topology.edges()) {
    simd::sub({ext.values.row(e.u).data(), mm}, {ext.values.row(e.v).data(), mm}, diff);
    simd::outer(diff, diff, {jac.slices.row(e.id).data(), mm * mm});
  }
  return jac;
}

SensitivityJacobian sensitivity_jacobian(const SpiderTopology& topology, const ConductanceVector& c) {
  return sensitivity_jacobian(topology, harmonic_extensions(assemble_laplacian(topology, c)));
}

Eigen::MatrixXd upper_triangular_jacobian(const SensitivityJacobian& jac) {
  const int m = jac.m;
  const int edges = static_cast<int>(jac.slices.rows());
  Eigen::MatrixXd out(m * (m + 1) / 2, edges);
  int row = 0;
  for (int s = 0; s < m; ++s) {
    for (int t = s; t < m; ++t, ++row) {
      for (int e = 0; e < edges; ++e) out(row, e) = jac.at(e, s, t);
    }
  }
  return out;
}

ConditioningResult conditioning_probe(int m) {
  const SpiderTopology topology = build_spider(m);
  const ConductanceVector ones = ConductanceVector::Ones(topology.edge_count());
  const Eigen::MatrixXd flat = upper_triangular_jacobian(sensitivity_jacobian(topology, ones));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(flat);
  const auto& sv = svd.singularValues();
  ConditioningResult out;
  out.m = m;
  out.sigma_max = sv(0);
  out.sigma_min = sv(sv.size() - 1);
  out.cond = out.sigma_min > 0.0 ? out.sigma_max / out.sigma_min : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace spider
