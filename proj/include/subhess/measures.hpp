#pragma once

// Grid functions, mollification, pairings of the 2-Hessian measure against
// smooth cutoffs, the mollification-ladder experiment and local bounds.

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "subhess/domain.hpp"
#include "subhess/exponents.hpp"
#include "subhess/fields.hpp"
#include "subhess/kernels.hpp"

namespace subhess {

// Default cap on lattice size for sampling (8 bytes per node).
inline constexpr std::size_t kDefaultMaxNodes = std::size_t{1} << 27;

// Scalar values on a uniform lattice. values.size() == lattice.size().
struct GridFunction {
  kernels::Lattice lattice;
  std::vector<double> values;
  // "sampled(<target>)", "mollified(eps=<eps>) of ...", "loaded".
  std::string provenance;

  std::size_t dimension() const { return lattice.dimension(); }
  // The box spanned by the lattice nodes.
  Domain domain() const;
};

// A polynomial or the pointwise maximum of several polynomials.
struct Target {
  std::vector<Polynomial> pieces;

  static Target polynomial(Polynomial p);
  // Rejects an empty list or mixed dimensions.
  static Target max_of(std::vector<Polynomial> pieces);
  std::size_t dimension() const { return pieces.front().dimension(); }
  bool is_polynomial() const { return pieces.size() == 1; }
  std::string describe() const;
};

// Lattice over the bounding box of `domain` with about h spacing: each axis
// gets round(extent / h) + 1 nodes and its spacing is adjusted to fit exactly.
kernels::Lattice lattice_for(const Domain& domain, double h);

// Exact evaluation at every node. Throws RejectedInput if h <= 0 or the
// lattice exceeds max_nodes.
GridFunction sample_to_grid(const Target& u, const Domain& domain, double h, std::size_t max_nodes = kDefaultMaxNodes);
GridFunction sample_to_grid(const Target& u, const kernels::Lattice& lattice, std::size_t max_nodes = kDefaultMaxNodes);

// Kernel c (1 - |y/eps|^2)_+^4 on lattice offsets, normalized to sum 1.
kernels::Stencil mollifier_stencil(const std::vector<double>& h, double eps);

// Discrete convolution with the mollifier; the output lattice loses
// floor(eps / h) nodes on every side. Requires eps >= 2h on every axis.
GridFunction mollify(const GridFunction& g, double eps);

// Every other node starting from index 0, at spacing 2h.
GridFunction coarsen(const GridFunction& g);

// eta(x) = c ((1 - |x - center|^2 / rho^2)_+)^3, or the indicator of a domain.
class Cutoff {
 public:
  enum class Kind { bump, indicator };
  // normalized: c chosen so that the exact integral of eta is 1.
  static Cutoff bump(std::vector<double> center, double rho, bool normalized = true);
  static Cutoff indicator(Domain domain);

  Kind kind() const { return kind_; }
  std::size_t dimension() const { return support_.dimension(); }
  // The closed support: a ball for bumps.
  const Domain& support() const { return support_; }
  double scale() const { return scale_; }
  double operator()(std::span<const double> x) const;
  // eta restricted to its support, as a polynomial.
  Polynomial polynomial() const;
  // Exact integral of eta.
  double mass() const;
  std::string id() const;

 private:
  Cutoff(Kind kind, Domain support, double scale) : kind_(kind), support_(std::move(support)), scale_(scale) {}
  Kind kind_;
  Domain support_;
  double scale_;
};

struct PairingOptions {
  // Coarse quadrature resolution for polynomial input (fine is twice this).
  std::size_t coarse_per_axis = 24;
  // Grid input: also evaluate at spacing 2h and report |Q_h - Q_2h| / 3.
  bool error_estimate = true;
};

struct PairingResult {
  std::string eta_id;
  double alpha = 0.0;
  // value = f2_part + alpha * e2_part = int eta (F_2 + alpha E_2).
  double value = 0.0;
  double f2_part = 0.0;
  double e2_part = 0.0;
  // int |u - v| and int |u + v| for paired comparisons; NaN when not set.
  double l1_delta = std::numeric_limits<double>::quiet_NaN();
  double l1_mass = std::numeric_limits<double>::quiet_NaN();
  double resolution = 0.0;
  double error_estimate = 0.0;
  // min over the support of min(S_1, S_2) of the symmetric Hessian.
  double kconvex_margin = std::numeric_limits<double>::infinity();
};

// Symbolic operator, then quadrature over the cutoff support.
PairingResult pairing(const FieldSystem& s, const Polynomial& u, const Cutoff& eta, double alpha,
                      const PairingOptions& options = {});
// Lattice jets from composed central differences. The support must stay two
// cells inside the lattice (four with the error estimate).
PairingResult pairing(const FieldSystem& s, const GridFunction& u, const Cutoff& eta, double alpha,
                      const PairingOptions& options = {});

// Lattice quadrature weights for the nodes inside `domain`: tensor Simpson on
// boxes aligned with the lattice (trapezoid on axes with an odd number of
// intervals, unit weights when unaligned), cell volumes inside balls.
std::vector<double> domain_weights(const kernels::Lattice& lattice, const Domain& domain);

// int_region |a - b| and int_region |a + b|; the two grids must share nodes on the region.
struct L1Pair {
  double delta = 0.0;
  double mass = 0.0;
};
L1Pair l1_pair(const GridFunction& a, const GridFunction& b, const Domain& region);
double l1_norm(const GridFunction& g, const Domain& region);

struct LocalBoundsOptions {
  int k = 2;
  double q = 2.0;
  double r = 1.0;
  // Homogeneous dimension; defaults to the system's.
  std::optional<int> Q;
  // Relative tolerance of the k-convexity precondition.
  double convexity_tol = 1e-6;
  // Lattice spacing for polynomial input.
  double h = 0.025;
};

struct LocalBoundsReport {
  double l1_outer = 0.0;       // int_outer |u|
  double sup_inner = 0.0;      // sup_inner u^+
  double gradient_norm = 0.0;  // ||Xu||_{L^q(inner)}
  double energy = 0.0;         // int_inner |Xu|^r Delta_X u
  double f2_integral = 0.0;    // int_inner (F_2 + 3/4 E_2)
  double sup_ratio = 0.0;
  double gradient_ratio = 0.0;
  double energy_ratio = 0.0;
  double f2_ratio = 0.0;
  double kconvex_margin = 0.0;
  double h = 0.0;
  ExponentReport exponents;
  bool finite() const;
};

// Rejects inner not compactly inside outer, exponents outside the admissible
// ranges, and u failing k-convexity on the inner nodes.
LocalBoundsReport local_bounds(const FieldSystem& s, const GridFunction& u, const Domain& inner, const Domain& outer,
                               const LocalBoundsOptions& options = {});
// Exact values and jets at the nodes of a lattice of spacing options.h on the outer box.
LocalBoundsReport local_bounds(const FieldSystem& s, const Polynomial& u, const Domain& inner, const Domain& outer,
                               const LocalBoundsOptions& options = {});

struct LadderOptions {
  double h = 0.0125;
  std::vector<double> eps_ladder{0.2, 0.1, 0.05, 0.025};
  std::vector<double> alphas{0.0, 0.25, 0.75};
  // Ladder members whose 2-convexity margin is below -margin_tol invalidate the run.
  double margin_tol = 1e-6;
  bool error_estimates = false;
  std::size_t max_nodes = kDefaultMaxNodes;
};

struct LadderRow {
  double eps = 0.0;
  // ||u_eps - u_ref||_{L^1} over the cutoff support box; the reference is the smallest eps.
  double l1_delta = 0.0;
  double l1_mass = 0.0;
  std::vector<double> pairing;  // per alpha
  std::vector<double> gap;      // |pairing - pairing_ref| per alpha
  std::vector<double> error_estimate;
  double kconvex_margin = 0.0;
  // int_{inner} F_2-script / (int_{outer} |u|)^2 with outer the support box and inner half of it.
  double f2_ratio = 0.0;
};

struct LadderResult {
  std::string target;
  std::string eta_id;
  std::vector<double> alphas;
  std::vector<LadderRow> rows;  // in ladder order; the last row is the reference
  bool valid = true;
  std::string invalid_reason;

  // Gaps strictly decrease along the non-reference rows.
  bool gaps_decrease(std::size_t alpha_index) const;
  // Gap of the last non-reference row relative to the reference pairing.
  double final_relative_gap(std::size_t alpha_index) const;
  double f2_ratio_spread() const;  // max / min over rows
};

// Mollifies the target on a cube around the cutoff support and pairs every
// ladder member. The ladder must be strictly decreasing with at least two entries.
LadderResult weak_continuity_experiment(const FieldSystem& s, const Target& target, const Cutoff& eta,
                                        const LadderOptions& options = {});

// Text format: `n`, then per axis `lo hi count`, then `h` per axis, a
// provenance line, then the values in row-major order, one per line.
void write_grid(std::ostream& out, const GridFunction& g);
GridFunction read_grid(std::istream& in);

}  // namespace subhess
