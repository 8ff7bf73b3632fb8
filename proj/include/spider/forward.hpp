#pragma once

// Forward conductance problem: weighted Laplacian, harmonic extensions of the
// boundary basis vectors, the response (Dirichlet-to-Neumann) matrix as a
// Schur complement, and its derivatives with respect to edge conductances.

#include <vector>

#include <Eigen/Core>

#include "spider/topology.hpp"

namespace spider {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ResponseMatrix = Eigen::MatrixXd;

// Dense n x n Laplacian in boundary-first vertex order.
struct LaplacianMatrix {
  Eigen::MatrixXd full;
  int m = 0;

  int n() const { return static_cast<int>(full.rows()); }
  // L(dF; dF), L(dF; F), L(F; F)
  auto boundary_block() const { return full.topLeftCorner(m, m); }
  auto coupling_block() const { return full.topRightCorner(m, n() - m); }
  auto interior_block() const { return full.bottomRightCorner(n() - m, n() - m); }
};

// Column t is the potential with boundary values e_t and zero net current at
// every interior vertex. Row-major so a vertex's potentials over all t are
// contiguous. The top m x m block is the identity.
struct HarmonicExtensionSet {
  RowMatrix values;  // n x m

  int m() const { return static_cast<int>(values.cols()); }
  auto interior() const { return values.bottomRows(values.rows() - values.cols()); }
};

// Derivatives of the response matrix: row e holds dN/dc_e flattened
// row-major (index s * m + t).
struct SensitivityJacobian {
  RowMatrix slices;  // |E| x m^2
  int m = 0;

  double at(int edge, int s, int t) const { return slices(edge, s * m + t); }
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> slice(int edge) const {
    return {slices.row(edge).data(), m, m};
  }
};

// Throws Error(nonpositive_conductance) if any c_e <= 0 or is not finite, and
// Error(dimension_mismatch) if c does not have one entry per edge.
LaplacianMatrix assemble_laplacian(const SpiderTopology& topology, const ConductanceVector& c);

// Interior potentials solve L(F;F) v_F = -L(dF;F)^T e_t. Throws
// Error(singular_interior_block) when the Cholesky factorization of L(F;F) fails.
HarmonicExtensionSet harmonic_extensions(const LaplacianMatrix& laplacian);

// N = A - B D^{-1} B^T, symmetrized.
ResponseMatrix response_matrix(const LaplacianMatrix& laplacian);

// Response matrix computed from already-known harmonic extensions: N = A + B V_F.
ResponseMatrix response_from_extensions(const LaplacianMatrix& laplacian, const HarmonicExtensionSet& ext);

struct ForwardState {
  LaplacianMatrix laplacian;
  HarmonicExtensionSet extensions;
  ResponseMatrix response;
};

// Laplacian, harmonic extensions and response matrix from one factorization.
ForwardState solve_forward(const SpiderTopology& topology, const ConductanceVector& c);

// dN(s,t)/dc_(u,v) = (v_u^s - v_v^s)(v_u^t - v_v^t).
SensitivityJacobian sensitivity_jacobian(const SpiderTopology& topology, const HarmonicExtensionSet& ext);
SensitivityJacobian sensitivity_jacobian(const SpiderTopology& topology, const ConductanceVector& c);

struct ConditioningResult {
  int m = 0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double cond = 0.0;
};

// Singular-value extremes of the sensitivity Jacobian at unit conductance,
// flattened to the m(m+1)/2 upper-triangular response entries x |E|.
ConditioningResult conditioning_probe(int m);

// Upper-triangular flattening used by the probe: rows (s, t) with s <= t.
Eigen::MatrixXd upper_triangular_jacobian(const SensitivityJacobian& jac);

}  // namespace spider
