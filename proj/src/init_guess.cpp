#include "spider/init_guess.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "spider/error.hpp"
#include "spider/simd.hpp"

namespace spider {

ResponseMatrix unit_dtn(const SpiderTopology& topology) {
  return response_matrix(assemble_laplacian(topology, ConductanceVector::Ones(topology.edge_count())));
}

ResponseMatrix unit_dtn_green(const SpiderTopology& topology) {
  const int m = topology.m();
  if (m < 7) throw Error(ErrorCode::invalid_m, "the Green-function route needs at least one circle");
  const LaplacianMatrix lap = assemble_laplacian(topology, ConductanceVector::Ones(topology.edge_count()));
  const Eigen::MatrixXd green = Eigen::LLT<Eigen::MatrixXd>(lap.interior_block())
                                    .solve(Eigen::MatrixXd::Identity(topology.interior_count(), topology.interior_count()));
  ResponseMatrix out = ResponseMatrix::Identity(m, m);
  for (int s = 0; s < m; ++s) {
    const int ws = topology.boundary_neighbor(s) - m;
    for (int t = 0; t < m; ++t) out(s, t) -= green(ws, topology.boundary_neighbor(t) - m);
  }
  return out;
}

namespace {

// Log-barrier interior-point iteration on the one-dimensional NNLS
//   min a c^2 - 2 b c  s.t. c >= 0.
double interior_point_nnls(double a, double b) {
  double c = std::max(1.0, std::abs(b) / a);
  double tau = a * c * c;
  for (int outer = 0; outer < 200 && tau > 1e-30 * std::max(1.0, a); ++outer) {
    for (int it = 0; it < 50; ++it) {
      const double grad = 2.0 * a * c - 2.0 * b - tau / c;
      const double hess = 2.0 * a + tau / (c * c);
      double step = -grad / hess;
      // fraction to the boundary
      if (c + step <= 0.0) step = -0.99 * c;
      c += step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, c)) break;
    }
    tau *= 0.1;
  }
  return c;
}

}  // namespace

double constant_fit(const ResponseMatrix& data, const ResponseMatrix& unit, ConstantFitMethod method) {
  if (data.rows() != unit.rows() || data.cols() != unit.cols()) {
    throw Error(ErrorCode::dimension_mismatch, "response matrix size does not match the network");
  }
  const auto size = static_cast<std::size_t>(unit.size());
  const double mm = simd::squared_norm({unit.data(), size});
  if (!(mm > 0.0)) throw Error(ErrorCode::degenerate_matrix, "unit response matrix has zero norm");
  const double nm = simd::dot({data.data(), size}, {unit.data(), size});
  if (method == ConstantFitMethod::interior_point) return interior_point_nnls(mm, nm);
  return std::max(0.0, nm / mm);
}

double constant_fit(const ResponseMatrix& data, const SpiderTopology& topology, ConstantFitMethod method) {
  if (data.rows() != topology.m() || data.cols() != topology.m()) {
    throw Error(ErrorCode::dimension_mismatch, "response matrix must be m x m");
  }
  return constant_fit(data, unit_dtn(topology), method);
}

HarmonicExtensionSet initial_voltages(const SpiderTopology& topology) {
  return harmonic_extensions(assemble_laplacian(topology, ConductanceVector::Ones(topology.edge_count())));
}

InitialGuess initial_guess(const ResponseMatrix& data, const SpiderTopology& topology, ConstantFitMethod method) {
  return {constant_fit(data, topology, method), initial_voltages(topology)};
}

}  // namespace spider
