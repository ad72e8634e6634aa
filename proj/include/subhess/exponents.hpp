#pragma once

// Admissible exponent ranges for the gradient, energy, Sobolev and Hoelder
// estimates of k-convex functions, in exact rational arithmetic.

#include <optional>
#include <string>

#include "subhess/sympoly.hpp"

namespace subhess {

// Upper end of an exponent range. An empty value means +infinity.
struct ExponentBound {
  std::optional<Rational> value;
  // Whether the end point itself is admissible (for an infinite bound:
  // whether the exponent infinity is admissible).
  bool inclusive = false;

  bool is_infinite() const { return !value.has_value(); }
  // x is admissible with respect to this upper end.
  bool admits(double x) const;
  // "4/3", "inf".
  std::string to_string() const;
  friend bool operator==(const ExponentBound&, const ExponentBound&) = default;
};

struct ExponentReport {
  int k = 0, m = 0, Q = 0;
  ExponentBound p_laplace_max;   // p - 1 <= k(m-1)/(m-k)
  ExponentBound q_gradient_max;  // 1 <= q < Qk(m-1)/((Q-1)(m-k))
  ExponentBound r_energy_max;    // 0 <= r < m(k-1)/(m-k)
  ExponentBound p_sobolev_max;
  Rational holder_threshold_k;   // (Q-1)m/(Q+m-2)
  std::optional<Rational> holder_alpha;
};

// Requires 1 <= k <= m, m >= 2, Q >= 2; RejectedInput otherwise.
ExponentReport exponent_report(int k, int m, int Q);

}  // namespace subhess
