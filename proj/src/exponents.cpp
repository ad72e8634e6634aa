#include "subhess/exponents.hpp"

#include <cmath>

#include "subhess/error.hpp"

namespace subhess {

namespace {

Rational frac(long num, long den) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

ExponentBound finite(Rational v, bool inclusive) { return {std::move(v), inclusive}; }
ExponentBound infinite(bool inclusive) { return {std::nullopt, inclusive}; }

}  // namespace

bool ExponentBound::admits(double x) const {
  if (std::isinf(x)) return is_infinite() && inclusive;
  if (is_infinite()) return true;
  const double v = value->get_d();
  return inclusive ? x <= v : x < v;
}

std::string ExponentBound::to_string() const { return value ? value->get_str() : "inf"; }

ExponentReport exponent_report(int k, int m, int Q) {
  if (m < 2) throw RejectedInput("exponent report needs m >= 2");
  if (k < 1 || k > m) throw RejectedInput("exponent report needs 1 <= k <= m");
  if (Q < 2) throw RejectedInput("exponent report needs Q >= 2");
  ExponentReport r;
  r.k = k;
  r.m = m;
  r.Q = Q;
  r.holder_threshold_k = frac(static_cast<long>(Q - 1) * m, Q + m - 2);
  if (k == m) {
    r.p_laplace_max = infinite(true);
    r.q_gradient_max = infinite(true);
    r.r_energy_max = infinite(false);
    r.p_sobolev_max = infinite(true);
    r.holder_alpha = Rational(1);
    return r;
  }
  const long mk = m - k;
  r.p_laplace_max = finite(Rational(1) + frac(static_cast<long>(k) * (m - 1), mk), true);
  r.q_gradient_max = finite(frac(static_cast<long>(Q) * k * (m - 1), static_cast<long>(Q - 1) * mk), false);
  r.r_energy_max = finite(frac(static_cast<long>(m) * (k - 1), mk), false);
  const long lhs = static_cast<long>(Q - 1) * m;
  const long rhs = static_cast<long>(Q + m - 2) * k;
  if (lhs > rhs)
    r.p_sobolev_max = finite(frac(static_cast<long>(Q) * k * (m - 1), lhs - rhs), false);
  else
    // Strictly below: p = infinity is admissible. On the boundary every
    // finite p is, but infinity is not.
    r.p_sobolev_max = infinite(lhs < rhs);
  if (Rational(k) > r.holder_threshold_k)
    r.holder_alpha = frac(static_cast<long>(k) * (Q + m - 2) - static_cast<long>(m) * (Q - 1), static_cast<long>(k) * (m - 1));
  return r;
}

}  // namespace subhess
