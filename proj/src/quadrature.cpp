#include "subhess/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace subhess {

namespace {

kernels::NodeSet box_nodes(const std::vector<double>& lo, const std::vector<double>& hi, std::size_t per_axis) {
  const std::size_t n = lo.size();
  kernels::NodeSet s;
  s.dim = n;
  std::size_t total = 1;
  for (std::size_t d = 0; d < n; ++d) total *= per_axis;
  s.coords.resize(total * n);
  s.weights.resize(total);
  double w = 1.0;
  std::vector<double> h(n);
  for (std::size_t d = 0; d < n; ++d) {
    h[d] = (hi[d] - lo[d]) / static_cast<double>(per_axis);
    w *= h[d];
  }
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rem = i;
    for (std::size_t d = n; d-- > 0;) {
      s.coords[i * n + d] = lo[d] + (static_cast<double>(rem % per_axis) + 0.5) * h[d];
      rem /= per_axis;
    }
    s.weights[i] = w;
  }
  return s;
}

kernels::NodeSet ball_nodes(const std::vector<double>& c, double radius, std::size_t per_axis) {
  const std::size_t n = c.size();
  if (n == 1) return box_nodes({c[0] - radius}, {c[0] + radius}, per_axis);
  // Axes: r, phi_1..phi_{n-2}, theta.
  std::vector<std::size_t> counts(n, per_axis);
  counts[n - 1] = 2 * per_axis;
  std::vector<double> step(n);
  step[0] = radius / static_cast<double>(per_axis);
  for (std::size_t a = 1; a + 1 < n; ++a) step[a] = std::numbers::pi / static_cast<double>(per_axis);
  step[n - 1] = 2.0 * std::numbers::pi / static_cast<double>(counts[n - 1]);
  std::size_t total = 1;
  for (auto k : counts) total *= k;
  kernels::NodeSet s;
  s.dim = n;
  s.coords.resize(total * n);
  s.weights.resize(total);
  double cell = 1.0;
  for (double v : step) cell *= v;
  std::vector<double> t(n);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rem = i;
    for (std::size_t a = n; a-- > 0;) {
      t[a] = (static_cast<double>(rem % counts[a]) + 0.5) * step[a];
      rem /= counts[a];
    }
    const double r = t[0];
    double jac = std::pow(r, static_cast<double>(n - 1));
    double prod_sin = r;
    double* x = s.coords.data() + i * n;
    for (std::size_t a = 1; a + 1 < n; ++a) {
      x[a - 1] = prod_sin * std::cos(t[a]);
      jac *= std::pow(std::sin(t[a]), static_cast<double>(n - 1 - a));
      prod_sin *= std::sin(t[a]);
    }
    x[n - 2] = prod_sin * std::cos(t[n - 1]);
    x[n - 1] = prod_sin * std::sin(t[n - 1]);
    for (std::size_t d = 0; d < n; ++d) x[d] += c[d];
    s.weights[i] = jac * cell;
  }
  return s;
}

// Integral of y^b over the ball |y| <= R centred at the origin.
double ball_moment(const Exponent& b, double radius) {
  double lg = 0.0;
  double deg = 0.0;
  for (auto e : b) {
    if (e % 2) return 0.0;
    lg += std::lgamma(0.5 * (e + 1.0));
    deg += e;
  }
  const double n = static_cast<double>(b.size());
  lg -= std::lgamma(0.5 * (deg + n));
  return 2.0 * std::exp(lg) * std::pow(radius, deg + n) / (deg + n);
}

double binomial(std::uint32_t a, std::uint32_t b) {
  double r = 1.0;
  for (std::uint32_t i = 1; i <= b; ++i) r = r * (a - b + i) / i;
  return r;
}

}  // namespace

kernels::NodeSet midpoint_nodes(const Domain& domain, std::size_t per_axis) {
  if (per_axis == 0) throw RejectedInput("quadrature needs at least one cell per axis");
  if (domain.shape() == Domain::Shape::box) return box_nodes(domain.lo(), domain.hi(), per_axis);
  return ball_nodes(domain.center(), domain.radius(), per_axis);
}

QuadratureResult integrate(const CompiledPolynomial& f, const Domain& domain, std::size_t coarse_per_axis) {
  if (f.dimension() != domain.dimension()) throw DimensionMismatch("integrand and domain dimensions differ");
  QuadratureResult q;
  q.coarse = kernels::parallel::integrate(f, midpoint_nodes(domain, coarse_per_axis));
  const auto fine = midpoint_nodes(domain, 2 * coarse_per_axis);
  q.value = kernels::parallel::integrate(f, fine);
  q.error = std::abs(q.value - q.coarse) / 3.0;
  q.nodes = fine.size();
  return q;
}

double exact_integral(const Polynomial& p, const Domain& domain) {
  if (p.dimension() != domain.dimension()) throw DimensionMismatch("polynomial and domain dimensions differ");
  const std::size_t n = p.dimension();
  double total = 0.0;
  if (domain.shape() == Domain::Shape::box) {
    for (const auto& [e, c] : p.terms()) {
      double t = c.get_d();
      for (std::size_t d = 0; d < n; ++d) {
        const double k = e[d] + 1.0;
        t *= (std::pow(domain.hi()[d], k) - std::pow(domain.lo()[d], k)) / k;
      }
      total += t;
    }
    return total;
  }
  // Expand about the centre: prod (c_d + y_d)^{a_d} = sum_b prod C(a_d, b_d) c_d^{a_d - b_d} y^b.
  const auto& c = domain.center();
  for (const auto& [e, coeff] : p.terms()) {
    Exponent b(n, 0);
    const double base = coeff.get_d();
    while (true) {
      double t = base;
      for (std::size_t d = 0; d < n; ++d) t *= binomial(e[d], b[d]) * std::pow(c[d], static_cast<double>(e[d] - b[d]));
      if (t != 0.0) total += t * ball_moment(b, domain.radius());
      std::size_t d = 0;
      while (d < n && b[d] == e[d]) b[d++] = 0;
      if (d == n) break;
      ++b[d];
    }
  }
  return total;
}

}  // namespace subhess
