#pragma once

// Certification of the structural identities and inequalities: divergence
// form of the modified 2-Hessian, the MacLaurin chain, p-subharmonicity of
// k-convex functions and the monotonicity of the integrated operator.

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "subhess/domain.hpp"
#include "subhess/hessian.hpp"
#include "subhess/quadrature.hpp"

namespace subhess {

enum class IdentityStatus { exact_zero, holds_within, violated };

const char* to_string(IdentityStatus s);

struct IdentityResult {
  std::string name;
  IdentityStatus status = IdentityStatus::violated;
  double tolerance = 0.0;
  // Symbolic residual; zero whenever status is exact_zero.
  std::optional<Polynomial> residual;
  // Scalar size of the residual (max |coefficient| for polynomials).
  double residual_norm = 0.0;
  std::optional<std::vector<double>> witness;
  std::optional<double> witness_value;
  std::string note;

  bool ok() const { return status != IdentityStatus::violated; }
};

double coefficient_norm(const Polynomial& p);

struct DivergenceReport {
  // sum_i X_i F2^{ij}(X^2 u) for each column j.
  std::vector<IdentityResult> columns;
  // Classical F_2 columns; filled only for commuting systems.
  std::vector<IdentityResult> classical;
  bool all_zero() const;
};

DivergenceReport verify_divergence_identity(const FieldSystem& s, const Polynomial& u);

// S_j of a vector by the subset-sum recurrence, optionally with entry
// `skip` set to zero.
template <class T>
T elementary_symmetric(std::span<const T> lambda, std::size_t j, std::optional<std::size_t> skip = std::nullopt) {
  std::vector<T> e(j + 1, T(0));
  e[0] = T(1);
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (skip && *skip == i) continue;
    for (std::size_t k = j; k >= 1; --k) e[k] += e[k - 1] * lambda[i];
  }
  return e[j];
}

// Checks, for every i, S_{j,i} >= 0 (j < k), S_k = S_{k,i} + S_{k-1,i} lambda_i,
// and -lambda_i <= S_{k,i}/S_{k-1,i} <= (m-k)/(k(m-1)) S_{1,i}. Throws
// RejectedInput unless S_1..S_k >= 0. Relative tolerance `tol`.
IdentityResult verify_maclaurin_chain(std::span<const double> lambda, std::size_t k, double tol);
// Exact version: every comparison is over the rationals.
IdentityResult verify_maclaurin_chain(std::span<const Rational> lambda, std::size_t k);

struct PSubharmonicReport {
  IdentityResult result;
  std::size_t samples = 0;
  std::size_t singular_skipped = 0;
  std::size_t bound_checked = 0;
  double min_delta_p = std::numeric_limits<double>::infinity();
  // min over checked samples of factor * delta_p - |Xu|^r delta_X u (scaled).
  double min_bound_slack = std::numeric_limits<double>::infinity();
};

// p = +infinity selects the infinity-Laplacian (admissible only for k = m).
PSubharmonicReport verify_p_subharmonicity(const FieldSystem& s, const Polynomial& u, std::size_t k,
                                           const std::vector<std::vector<double>>& samples, double p, double tol);

// (rho^2 - |x - c|^2)^order: positive inside the ball, vanishing to the given
// order on its boundary. Centre and radius are converted to rationals exactly.
Polynomial ball_bump(const std::vector<double>& center, double radius, unsigned order);

enum class MonotoneOperator { f2, f2_star };

struct MonotonicityOptions {
  std::size_t coarse_per_axis = 16;
  double boundary_tol = 1e-12;
  double order_tol = 1e-12;
  double ellipticity_tol = 1e-9;
  std::size_t boundary_samples = 256;
};

struct MonotonicityResult {
  MonotoneOperator which = MonotoneOperator::f2;
  // int (F[u] - F[v]) at the fine resolution, the coarse value and the h^2 error estimate.
  double gap = 0.0;
  double gap_coarse = 0.0;
  double quadrature_error = 0.0;
  // |fine - coarse| / |fine|.
  double richardson_relative = 0.0;
  std::size_t nodes = 0;
  double min_ellipticity_margin = 0.0;
  // Set when the smallest ellipticity margin is below 1e-6.
  bool small_margin = false;
  double max_boundary_difference = 0.0;
  bool predicted_sign_holds() const { return gap >= -quadrature_error; }
};

// Preconditions (u <= v at quadrature nodes, u = v on the boundary within
// boundary_tol, (tr s) I - s >= 0 for s = X_s^2 (u + v) at coarse nodes) are
// checked and raise RejectedInput.
MonotonicityResult monotonicity_gap(const FieldSystem& s, const Polynomial& u, const Polynomial& v,
                                    const Domain& domain, MonotoneOperator which,
                                    const MonotonicityOptions& options = {});

}  // namespace subhess
