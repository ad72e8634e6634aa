#include "subhess/identities.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace subhess {

const char* to_string(IdentityStatus s) {
  switch (s) {
    case IdentityStatus::exact_zero:
      return "exact_zero";
    case IdentityStatus::holds_within:
      return "holds_within";
    case IdentityStatus::violated:
      return "violated";
  }
  return "violated";
}

double coefficient_norm(const Polynomial& p) {
  double m = 0.0;
  for (const auto& [e, c] : p.terms()) m = std::max(m, std::abs(c.get_d()));
  return m;
}

bool DivergenceReport::all_zero() const {
  auto zero = [](const IdentityResult& r) { return r.status == IdentityStatus::exact_zero; };
  return std::all_of(columns.begin(), columns.end(), zero) && std::all_of(classical.begin(), classical.end(), zero);
}

namespace {

IdentityResult residual_result(std::string name, Polynomial residual) {
  IdentityResult r;
  r.name = std::move(name);
  r.status = residual.is_zero() ? IdentityStatus::exact_zero : IdentityStatus::violated;
  r.residual_norm = coefficient_norm(residual);
  r.residual = std::move(residual);
  return r;
}

Polynomial column_divergence(const FieldSystem& s, const Matrix<Polynomial>& lin, std::size_t j) {
  Polynomial total(s.n());
  for (std::size_t i = 0; i < s.m(); ++i) total += s[i].apply(lin(i, j));
  return total;
}

}  // namespace

DivergenceReport verify_divergence_identity(const FieldSystem& s, const Polynomial& u) {
  const auto h = full_hessian(s, u);
  DivergenceReport rep;
  const auto lin = f2_linearized(h.full);
  for (std::size_t j = 0; j < s.m(); ++j)
    rep.columns.push_back(residual_result("divergence_column_" + std::to_string(j + 1), column_divergence(s, lin, j)));
  if (s.is_commuting()) {
    const auto classical = f2_classical_linearized(h.full);
    for (std::size_t j = 0; j < s.m(); ++j)
      rep.classical.push_back(
          residual_result("classical_divergence_column_" + std::to_string(j + 1), column_divergence(s, classical, j)));
  }
  return rep;
}

namespace {

template <class T>
struct ChainTraits;

template <>
struct ChainTraits<double> {
  static double to_double(double v) { return v; }
};

template <>
struct ChainTraits<Rational> {
  static double to_double(const Rational& v) { return v.get_d(); }
};

// le(a, b, scale): a <= b within tolerance tol * scale (exact when tol == 0).
template <class T>
IdentityResult maclaurin_impl(std::span<const T> lambda, std::size_t k, double tol) {
  const std::size_t m = lambda.size();
  if (m < 2) throw RejectedInput("MacLaurin chain needs m >= 2");
  if (k < 1 || k > m) throw RejectedInput("MacLaurin chain needs 1 <= k <= m");
  for (std::size_t j = 1; j <= k; ++j) {
    if (elementary_symmetric(lambda, j) < T(0))
      throw RejectedInput("lambda is not admissible: S_" + std::to_string(j) + " < 0");
  }
  const bool exact = tol == 0.0;
  IdentityResult r;
  r.name = "maclaurin_chain";
  r.tolerance = tol;
  r.status = IdentityStatus::holds_within;
  auto fail = [&](std::size_t i, double value, std::string what) {
    if (r.status == IdentityStatus::violated) return;
    r.status = IdentityStatus::violated;
    r.witness = std::vector<double>{static_cast<double>(i + 1)};
    r.witness_value = value;
    r.note = std::move(what);
  };
  auto le = [&](const T& a, const T& b, double scale) {
    if (exact) return a <= b;
    return ChainTraits<T>::to_double(a) <= ChainTraits<T>::to_double(b) + tol * scale;
  };
  const T c = T(static_cast<long>(m - k)) / T(static_cast<long>(k * (m - 1)));
  const T sk = elementary_symmetric(lambda, k);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 1; j < k; ++j) {
      const T sji = elementary_symmetric(lambda, j, i);
      if (!le(T(0), sji, 1.0)) fail(i, ChainTraits<T>::to_double(sji), "S_" + std::to_string(j) + ",i < 0");
    }
    const T ski = elementary_symmetric(lambda, k, i);
    const T sk1i = elementary_symmetric(lambda, k - 1, i);
    const T decomposition = sk - ski - sk1i * lambda[i];
    const double dscale = std::max({1.0, std::abs(ChainTraits<T>::to_double(sk)), std::abs(ChainTraits<T>::to_double(ski))});
    if (exact ? decomposition != T(0) : std::abs(ChainTraits<T>::to_double(decomposition)) > tol * dscale)
      fail(i, ChainTraits<T>::to_double(decomposition), "S_k != S_k,i + S_k-1,i lambda_i");
    r.residual_norm = std::max(r.residual_norm, std::abs(ChainTraits<T>::to_double(decomposition)));
    if (!(sk1i > T(0))) continue;
    const T ratio = ski / sk1i;
    const T upper = c * elementary_symmetric(lambda, 1, i);
    const T lower = -lambda[i];
    const double scale = std::max({1.0, std::abs(ChainTraits<T>::to_double(ratio)), std::abs(ChainTraits<T>::to_double(lower)),
                                   std::abs(ChainTraits<T>::to_double(upper))});
    if (!le(lower, ratio, scale)) fail(i, ChainTraits<T>::to_double(ratio - lower), "-lambda_i > S_k,i / S_k-1,i");
    if (!le(ratio, upper, scale)) fail(i, ChainTraits<T>::to_double(upper - ratio), "S_k,i / S_k-1,i above the MacLaurin bound");
  }
  return r;
}

}  // namespace

IdentityResult verify_maclaurin_chain(std::span<const double> lambda, std::size_t k, double tol) {
  if (!(tol > 0)) throw RejectedInput("floating-point MacLaurin check needs a positive tolerance");
  return maclaurin_impl<double>(lambda, k, tol);
}

IdentityResult verify_maclaurin_chain(std::span<const Rational> lambda, std::size_t k) {
  return maclaurin_impl<Rational>(lambda, k, 0.0);
}

PSubharmonicReport verify_p_subharmonicity(const FieldSystem& s, const Polynomial& u, std::size_t k,
                                           const std::vector<std::vector<double>>& samples, double p, double tol) {
  const std::size_t m = s.m();
  if (k < 1 || k > m) throw RejectedInput("p-subharmonicity needs 1 <= k <= m");
  const bool infinity = std::isinf(p) && p > 0;
  if (infinity) {
    if (k != m) throw RejectedInput("p = infinity is admissible only for k = m");
  } else {
    if (!(p >= 1.0)) throw RejectedInput("p must be at least 1");
    if (k < m) {
      const double pmax = 1.0 + static_cast<double>(k) * static_cast<double>(m - 1) / static_cast<double>(m - k);
      if (p > pmax * (1.0 + 1e-15)) throw RejectedInput("p exceeds 1 + k(m-1)/(m-k)");
    }
  }
  const JetEvaluator jets(s, u);
  const auto convex = is_k_convex(jets, k, samples, tol);
  if (!convex.holds) throw RejectedInput("u is not k-convex at the samples (S_" + std::to_string(convex.worst_j) + " = " +
                                         std::to_string(convex.worst_value) + ")");
  PSubharmonicReport rep;
  rep.result.name = infinity ? "infinity_subharmonicity" : "p_subharmonicity";
  rep.result.tolerance = tol;
  rep.result.status = IdentityStatus::holds_within;
  rep.samples = samples.size();
  const double r = p - 2.0;
  const double denom = static_cast<double>(m) * static_cast<double>(k - 1) - r * static_cast<double>(m - k);
  const bool check_bound = !infinity && r >= 0.0 && denom > 0.0;
  const double factor = check_bound ? static_cast<double>(m) * static_cast<double>(k - 1) / denom : 0.0;
  for (const auto& x : samples) {
    const auto jet = jets(x);
    double value;
    if (infinity) {
      value = delta_inf(jet);
    } else {
      if (jet.grad_norm2() == 0.0 && p < 2.0) {
        ++rep.singular_skipped;
        continue;
      }
      value = delta_p(jet, p);
    }
    rep.min_delta_p = std::min(rep.min_delta_p, value);
    if (value < -tol && rep.result.status != IdentityStatus::violated) {
      rep.result.status = IdentityStatus::violated;
      rep.result.witness = x;
      rep.result.witness_value = value;
      rep.result.note = "negative p-Laplacian";
    }
    if (check_bound && jet.grad_norm2() > 0.0) {
      ++rep.bound_checked;
      const double lhs = std::pow(jet.grad_norm2(), 0.5 * r) * jet.trace();
      const double rhs = factor * value;
      const double slack = (rhs - lhs) / std::max(1.0, std::abs(rhs));
      rep.min_bound_slack = std::min(rep.min_bound_slack, slack);
      if (slack < -tol && rep.result.status != IdentityStatus::violated) {
        rep.result.status = IdentityStatus::violated;
        rep.result.witness = x;
        rep.result.witness_value = slack;
        rep.result.note = "|Xu|^r Delta_X u exceeds the gradient bound";
      }
    }
  }
  return rep;
}

Polynomial ball_bump(const std::vector<double>& center, double radius, unsigned order) {
  const std::size_t n = center.size();
  if (n == 0 || !(radius > 0)) throw RejectedInput("bump needs a non-empty centre and a positive radius");
  Polynomial base = Polynomial::constant(n, Rational(radius) * Rational(radius));
  for (std::size_t i = 0; i < n; ++i) {
    const Polynomial d = Polynomial::variable(n, i) - Polynomial::constant(n, Rational(center[i]));
    base -= d * d;
  }
  Polynomial out = Polynomial::constant(n, 1);
  for (unsigned k = 0; k < order; ++k) out *= base;
  return out;
}

namespace {

std::vector<std::vector<double>> boundary_points(const Domain& d, std::size_t count) {
  std::mt19937_64 rng(0x5eed);
  auto unit = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const std::size_t n = d.dimension();
  std::vector<std::vector<double>> pts;
  for (std::size_t c = 0; c < count; ++c) {
    std::vector<double> x(n);
    if (d.shape() == Domain::Shape::ball) {
      double norm = 0.0;
      for (auto& v : x) {
        // Box-Muller normal deviate.
        const double a = std::max(unit(), 1e-300), b = unit();
        v = std::sqrt(-2.0 * std::log(a)) * std::cos(2.0 * std::numbers::pi * b);
        norm += v * v;
      }
      norm = std::sqrt(norm);
      for (std::size_t i = 0; i < n; ++i) x[i] = d.center()[i] + d.radius() * x[i] / norm;
    } else {
      for (std::size_t i = 0; i < n; ++i) x[i] = d.lo()[i] + unit() * (d.hi()[i] - d.lo()[i]);
      const std::size_t face = c % (2 * n);
      x[face / 2] = face % 2 ? d.hi()[face / 2] : d.lo()[face / 2];
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

}  // namespace

MonotonicityResult monotonicity_gap(const FieldSystem& s, const Polynomial& u, const Polynomial& v,
                                    const Domain& domain, MonotoneOperator which, const MonotonicityOptions& options) {
  if (u.dimension() != s.n() || v.dimension() != s.n() || domain.dimension() != s.n())
    throw DimensionMismatch("monotonicity_gap: u, v, domain and system must share dimension");
  MonotonicityResult res;
  res.which = which;

  const CompiledPolynomial diff(u - v);
  for (const auto& x : boundary_points(domain, options.boundary_samples))
    res.max_boundary_difference = std::max(res.max_boundary_difference, std::abs(diff(x)));
  if (res.max_boundary_difference > options.boundary_tol)
    throw RejectedInput("u and v differ on the boundary by " + std::to_string(res.max_boundary_difference));

  const auto coarse = midpoint_nodes(domain, options.coarse_per_axis);
  const JetEvaluator sum_jets(s, u + v);
  res.min_ellipticity_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    const auto x = coarse.point(i);
    if (diff(x) > options.order_tol) throw RejectedInput("u > v at a quadrature node");
    res.min_ellipticity_margin = std::min(res.min_ellipticity_margin, f2_ellipticity_margin(sum_jets(x).sym));
  }
  if (res.min_ellipticity_margin < -options.ellipticity_tol)
    throw RejectedInput("F_2 is not degenerate elliptic at u + v (margin " + std::to_string(res.min_ellipticity_margin) + ")");
  res.small_margin = res.min_ellipticity_margin < 1e-6;

  const Polynomial integrand =
      which == MonotoneOperator::f2 ? f2_family(s, u, Rational(3, 4)) - f2_family(s, v, Rational(3, 4)) : f2_star(s, u) - f2_star(s, v);
  const auto q = integrate(CompiledPolynomial(integrand), domain, options.coarse_per_axis);
  res.gap = q.value;
  res.gap_coarse = q.coarse;
  res.quadrature_error = q.error;
  res.nodes = q.nodes;
  res.richardson_relative = q.value != 0.0 ? std::abs(q.value - q.coarse) / std::abs(q.value) : std::abs(q.coarse);
  return res;
}

}  // namespace subhess
