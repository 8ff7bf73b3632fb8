#pragma once

// Warm start for the inverse solver: the constant conductance whose response
// matrix is closest to the data in the Frobenius norm, and the potentials of
// the constant-conductance network.

#include <Eigen/Core>

#include "spider/forward.hpp"
#include "spider/topology.hpp"

namespace spider {

// Response matrix of the spider with every conductance equal to 1.
ResponseMatrix unit_dtn(const SpiderTopology& topology);

// Second route for m >= 7: M = I - G(W; W) where G = L'(F;F)^{-1} and W are
// the interior vertices adjacent to the boundary, in radius order. Valid
// because every boundary vertex has degree one.
ResponseMatrix unit_dtn_green(const SpiderTopology& topology);

enum class ConstantFitMethod { closed_form, interior_point };

// argmin_{c0 >= 0} ||N - c0 M||_F^2 with M = unit_dtn(topology).
// Throws Error(dimension_mismatch) if N is not m x m, Error(degenerate_matrix)
// if ||M||_F = 0.
double constant_fit(const ResponseMatrix& data, const SpiderTopology& topology,
                    ConstantFitMethod method = ConstantFitMethod::closed_form);

// Same problem with an explicit M.
double constant_fit(const ResponseMatrix& data, const ResponseMatrix& unit,
                    ConstantFitMethod method = ConstantFitMethod::closed_form);

// Unit-conductance harmonic extensions; column t is the initial potential for
// boundary data e_t. Independent of c0.
HarmonicExtensionSet initial_voltages(const SpiderTopology& topology);

struct InitialGuess {
  double c0 = 0.0;
  HarmonicExtensionSet voltages;
};

InitialGuess initial_guess(const ResponseMatrix& data, const SpiderTopology& topology,
                           ConstantFitMethod method = ConstantFitMethod::closed_form);

}  // namespace spider
