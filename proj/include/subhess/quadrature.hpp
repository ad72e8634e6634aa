#pragma once

// Tensor midpoint rules on boxes and balls (hyperspherical coordinates), with
// a two-resolution error estimate.

#include "subhess/domain.hpp"
#include "subhess/kernels.hpp"

namespace subhess {

// Midpoint rule with `per_axis` cells on each axis of a box, or, for a ball,
// in (r, phi_1..phi_{n-2}, theta) with per_axis cells for r and each phi and
// 2 * per_axis for theta.
kernels::NodeSet midpoint_nodes(const Domain& domain, std::size_t per_axis);

struct QuadratureResult {
  double value = 0.0;   // fine resolution
  double coarse = 0.0;  // half the resolution
  // |fine - coarse| / 3: the h^2 Richardson estimate of the fine error.
  double error = 0.0;
  std::size_t nodes = 0;
};

QuadratureResult integrate(const CompiledPolynomial& f, const Domain& domain, std::size_t coarse_per_axis);

// Exact integral of a polynomial over a ball or box by monomial moments.
double exact_integral(const Polynomial& p, const Domain& domain);

}  // namespace subhess
