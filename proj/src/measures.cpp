#include "subhess/measures.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "subhess/hessian.hpp"
#include "subhess/quadrature.hpp"

namespace subhess {

using kernels::JetGrid;
using kernels::Lattice;

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Index box of the lattice nodes inside [lo, hi], which must keep `margin`
// nodes to every lattice edge.
struct IndexBox {
  std::vector<std::size_t> begin, counts;
};

IndexBox region_for(const Lattice& l, const std::vector<double>& lo, const std::vector<double>& hi, std::size_t margin) {
  IndexBox box;
  const std::size_t n = l.dimension();
  for (std::size_t d = 0; d < n; ++d) {
    const double a = std::ceil((lo[d] - l.lo[d]) / l.h[d] - 1e-9);
    const double b = std::floor((hi[d] - l.lo[d]) / l.h[d] + 1e-9);
    if (a < static_cast<double>(margin) || b + static_cast<double>(margin) > static_cast<double>(l.counts[d]) - 1.0)
      throw RejectedInput("region needs " + std::to_string(margin) + " lattice cells of margin on axis " +
                          std::to_string(d + 1));
    if (b < a) throw RejectedInput("region contains no lattice nodes on axis " + std::to_string(d + 1));
    box.begin.push_back(static_cast<std::size_t>(a));
    box.counts.push_back(static_cast<std::size_t>(b - a) + 1);
  }
  return box;
}

std::vector<double> extract(const GridFunction& g, const IndexBox& box) {
  const Lattice sub = g.lattice.sub(box.begin, box.counts);
  const auto st = g.lattice.strides();
  const std::size_t n = g.dimension();
  std::vector<double> out(sub.size());
  std::vector<std::size_t> idx(n);
  for (std::size_t o = 0; o < out.size(); ++o) {
    std::size_t rem = o, f = 0;
    for (std::size_t d = n; d-- > 0;) {
      f += (rem % box.counts[d] + box.begin[d]) * st[d];
      rem /= box.counts[d];
    }
    out[o] = g.values[f];
  }
  return out;
}

// S_1 and S_2 of the symmetric part of r (row-major m x m).
struct SecondOrder {
  double s1 = 0.0, s2 = 0.0, e2 = 0.0;
};

SecondOrder second_order(const JetGrid& jg, std::size_t node) {
  const std::size_t m = jg.m;
  SecondOrder out;
  for (std::size_t i = 0; i < m; ++i) {
    out.s1 += jg.r(i, i, node);
    for (std::size_t j = i + 1; j < m; ++j) {
      const double sij = 0.5 * (jg.r(i, j, node) + jg.r(j, i, node));
      const double cij = jg.r(i, j, node) - jg.r(j, i, node);
      out.s2 += jg.r(i, i, node) * jg.r(j, j, node) - sij * sij;
      out.e2 += cij * cij;
    }
  }
  return out;
}

std::vector<double> axis_weights(const Lattice& l, std::size_t d, double lo, double hi) {
  const double h = l.h[d];
  const double tol = 1e-9 * h;
  std::vector<double> w(l.counts[d], 0.0);
  std::vector<std::size_t> inside;
  for (std::size_t i = 0; i < l.counts[d]; ++i) {
    const double x = l.coordinate(d, i);
    if (x >= lo - tol && x <= hi + tol) inside.push_back(i);
  }
  if (inside.empty()) return w;
  const bool aligned = std::abs(l.coordinate(d, inside.front()) - lo) <= tol &&
                       std::abs(l.coordinate(d, inside.back()) - hi) <= tol && inside.size() >= 2;
  const std::size_t intervals = inside.size() - 1;
  for (std::size_t k = 0; k < inside.size(); ++k) {
    double v = h;
    if (aligned && intervals % 2 == 0) {
      v = (k == 0 || k == intervals) ? h / 3.0 : (k % 2 ? 4.0 * h / 3.0 : 2.0 * h / 3.0);
    } else if (aligned) {
      v = (k == 0 || k == intervals) ? h / 2.0 : h;
    }
    w[inside[k]] = v;
  }
  return w;
}

double weighted_sum(const std::vector<double>& w, const std::vector<double>& f) {
  std::vector<double> t(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) t[i] = w[i] * f[i];
  return kernels::parallel::tree_sum(t);
}

bool compactly_inside(const Domain& inner, const Domain& outer) {
  const std::size_t n = inner.dimension();
  if (outer.shape() == Domain::Shape::box) {
    for (std::size_t d = 0; d < n; ++d)
      if (!(inner.lo()[d] > outer.lo()[d] && inner.hi()[d] < outer.hi()[d])) return false;
    return true;
  }
  if (inner.shape() == Domain::Shape::ball) {
    double dist = 0.0;
    for (std::size_t d = 0; d < n; ++d) dist += std::pow(inner.center()[d] - outer.center()[d], 2);
    return std::sqrt(dist) + inner.radius() < outer.radius();
  }
  // Box inside a ball: every corner strictly inside.
  std::vector<double> corner(n);
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    for (std::size_t d = 0; d < n; ++d) corner[d] = (mask >> d) & 1 ? inner.hi()[d] : inner.lo()[d];
    if (!(outer.depth(corner) > 0.0)) return false;
  }
  return true;
}

}  // namespace

Domain GridFunction::domain() const {
  std::vector<double> hi(dimension());
  for (std::size_t d = 0; d < dimension(); ++d) hi[d] = lattice.coordinate(d, lattice.counts[d] - 1);
  return Domain::box(lattice.lo, hi);
}

Target Target::polynomial(Polynomial p) { return Target{{std::move(p)}}; }

Target Target::max_of(std::vector<Polynomial> pieces) {
  if (pieces.empty()) throw RejectedInput("max of an empty list of polynomials");
  for (const auto& p : pieces)
    if (p.dimension() != pieces.front().dimension()) throw DimensionMismatch("max_of: pieces differ in dimension");
  return Target{std::move(pieces)};
}

std::string Target::describe() const {
  if (is_polynomial()) return pieces.front().to_string();
  std::string s = "max(";
  for (std::size_t i = 0; i < pieces.size(); ++i) s += (i ? "; " : "") + pieces[i].to_string();
  return s + ")";
}

Lattice lattice_for(const Domain& domain, double h) {
  if (!(h > 0)) throw RejectedInput("lattice spacing must be positive");
  Lattice l;
  for (std::size_t d = 0; d < domain.dimension(); ++d) {
    const double extent = domain.hi()[d] - domain.lo()[d];
    const auto cells = static_cast<std::size_t>(std::max(1.0, std::round(extent / h)));
    l.counts.push_back(cells + 1);
    l.lo.push_back(domain.lo()[d]);
    l.h.push_back(extent / static_cast<double>(cells));
  }
  return l;
}

GridFunction sample_to_grid(const Target& u, const Lattice& lattice, std::size_t max_nodes) {
  if (u.dimension() != lattice.dimension()) throw DimensionMismatch("target and lattice dimensions differ");
  double nodes = 1.0;
  for (auto c : lattice.counts) nodes *= static_cast<double>(c);
  if (nodes > static_cast<double>(max_nodes))
    throw RejectedInput("lattice of " + short_fmt(nodes) + " nodes exceeds the budget of " + std::to_string(max_nodes));
  GridFunction g;
  g.lattice = lattice;
  g.values.assign(lattice.size(), 0.0);
  g.provenance = "sampled(" + u.describe() + ")";
  kernels::parallel::sample(CompiledPolynomial(u.pieces.front()), lattice, g.values);
  std::vector<double> other(g.values.size());
  for (std::size_t p = 1; p < u.pieces.size(); ++p) {
    kernels::parallel::sample(CompiledPolynomial(u.pieces[p]), lattice, other);
    for (std::size_t i = 0; i < other.size(); ++i) g.values[i] = std::max(g.values[i], other[i]);
  }
  return g;
}

GridFunction sample_to_grid(const Target& u, const Domain& domain, double h, std::size_t max_nodes) {
  if (domain.shape() != Domain::Shape::box) throw RejectedInput("grid functions live on boxes");
  return sample_to_grid(u, lattice_for(domain, h), max_nodes);
}

kernels::Stencil mollifier_stencil(const std::vector<double>& h, double eps) {
  const std::size_t n = h.size();
  for (double hd : h)
    if (!(eps >= 2.0 * hd * (1.0 - 1e-12))) throw RejectedInput("mollifier needs eps >= 2h");
  kernels::Stencil st;
  st.dim = n;
  std::vector<int> reach(n);
  for (std::size_t d = 0; d < n; ++d) {
    reach[d] = static_cast<int>(std::floor(eps / h[d] + 1e-12));
    st.radius = std::max(st.radius, static_cast<std::size_t>(reach[d]));
  }
  std::vector<int> o(n);
  for (std::size_t d = 0; d < n; ++d) o[d] = -reach[d];
  while (true) {
    double r2 = 0.0;
    for (std::size_t d = 0; d < n; ++d) r2 += std::pow(o[d] * h[d] / eps, 2);
    if (r2 < 1.0) {
      st.offsets.insert(st.offsets.end(), o.begin(), o.end());
      st.weights.push_back(std::pow(1.0 - r2, 4));
    }
    std::size_t d = 0;
    for (; d < n && o[d] == reach[d]; ++d) o[d] = -reach[d];
    if (d == n) break;
    ++o[d];
  }
  const double total = kernels::serial::tree_sum(st.weights);
  for (auto& w : st.weights) w /= total;
  return st;
}

GridFunction mollify(const GridFunction& g, double eps) {
  const auto st = mollifier_stencil(g.lattice.h, eps);
  const std::size_t n = g.dimension();
  std::vector<std::size_t> begin(n, st.radius), counts(n);
  for (std::size_t d = 0; d < n; ++d) {
    if (g.lattice.counts[d] <= 2 * st.radius) throw RejectedInput("mollification exhausts the grid margin");
    counts[d] = g.lattice.counts[d] - 2 * st.radius;
  }
  GridFunction out;
  out.lattice = g.lattice.sub(begin, counts);
  out.values.assign(out.lattice.size(), 0.0);
  kernels::parallel::convolve(g.lattice, g.values, st, out.values);
  out.provenance = "mollified(eps=" + short_fmt(eps) + ") of " + g.provenance;
  return out;
}

GridFunction coarsen(const GridFunction& g) {
  const std::size_t n = g.dimension();
  GridFunction out;
  out.lattice.lo = g.lattice.lo;
  for (std::size_t d = 0; d < n; ++d) {
    out.lattice.counts.push_back((g.lattice.counts[d] - 1) / 2 + 1);
    out.lattice.h.push_back(2.0 * g.lattice.h[d]);
  }
  const auto st = g.lattice.strides();
  out.values.resize(out.lattice.size());
  for (std::size_t o = 0; o < out.values.size(); ++o) {
    std::size_t rem = o, f = 0;
    for (std::size_t d = n; d-- > 0;) {
      f += 2 * (rem % out.lattice.counts[d]) * st[d];
      rem /= out.lattice.counts[d];
    }
    out.values[o] = g.values[f];
  }
  out.provenance = "coarsened of " + g.provenance;
  return out;
}

// ---------------------------------------------------------------- cutoffs

Cutoff Cutoff::bump(std::vector<double> center, double rho, bool normalized) {
  auto support = Domain::ball(std::move(center), rho);
  const double n = static_cast<double>(support.dimension());
  // int (1 - |y|^2/rho^2)^3 = rho^n pi^{n/2} Gamma(4) / Gamma(n/2 + 4).
  const double mass = std::pow(rho, n) * std::pow(std::numbers::pi, 0.5 * n) * 6.0 / std::tgamma(0.5 * n + 4.0);
  return Cutoff(Kind::bump, std::move(support), normalized ? 1.0 / mass : 1.0);
}

Cutoff Cutoff::indicator(Domain domain) { return Cutoff(Kind::indicator, std::move(domain), 1.0); }

double Cutoff::operator()(std::span<const double> x) const {
  if (kind_ == Kind::indicator) return support_.contains(x) ? 1.0 : 0.0;
  double r2 = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) r2 += std::pow(x[d] - support_.center()[d], 2);
  const double t = 1.0 - r2 / (support_.radius() * support_.radius());
  return t > 0.0 ? scale_ * t * t * t : 0.0;
}

Polynomial Cutoff::polynomial() const {
  const std::size_t n = dimension();
  if (kind_ == Kind::indicator) return Polynomial::constant(n, 1);
  const Rational r2 = Rational(support_.radius()) * Rational(support_.radius());
  Polynomial t = Polynomial::constant(n, 1);
  for (std::size_t d = 0; d < n; ++d) {
    const Polynomial y = Polynomial::variable(n, d) - Polynomial::constant(n, Rational(support_.center()[d]));
    t -= y * y * Rational(1 / r2);
  }
  return t * t * t * Rational(scale_);
}

double Cutoff::mass() const {
  if (kind_ == Kind::indicator) return support_.volume();
  const double n = static_cast<double>(dimension());
  return scale_ * std::pow(support_.radius(), n) * std::pow(std::numbers::pi, 0.5 * n) * 6.0 / std::tgamma(0.5 * n + 4.0);
}

std::string Cutoff::id() const {
  std::string c;
  for (std::size_t d = 0; d < dimension(); ++d) c += (d ? "," : "") + short_fmt(support_.center()[d]);
  if (kind_ == Kind::bump) return "bump3(center=[" + c + "],rho=" + short_fmt(support_.radius()) + ",scale=" + fmt(scale_) + ")";
  return std::string("indicator(") + (support_.shape() == Domain::Shape::ball ? "ball" : "box") + ",center=[" + c + "])";
}

// ---------------------------------------------------------------- pairing

PairingResult pairing(const FieldSystem& s, const Polynomial& u, const Cutoff& eta, double alpha,
                      const PairingOptions& options) {
  if (u.dimension() != s.n() || eta.dimension() != s.n()) throw DimensionMismatch("pairing: dimensions differ");
  const auto h = full_hessian(s, u);
  const Polynomial ep = eta.polynomial();
  const auto qf = integrate(CompiledPolynomial(ep * f2_family(h, Rational(0))), eta.support(), options.coarse_per_axis);
  const auto qe = integrate(CompiledPolynomial(ep * e2(h)), eta.support(), options.coarse_per_axis);
  PairingResult r;
  r.eta_id = eta.id();
  r.alpha = alpha;
  r.f2_part = qf.value;
  r.e2_part = qe.value;
  r.value = qf.value + alpha * qe.value;
  r.error_estimate = qf.error + std::abs(alpha) * qe.error;
  double extent = 0.0;
  for (std::size_t d = 0; d < s.n(); ++d) extent = std::max(extent, eta.support().hi()[d] - eta.support().lo()[d]);
  r.resolution = extent / static_cast<double>(2 * options.coarse_per_axis);
  const JetEvaluator jets(s, u);
  const auto nodes = midpoint_nodes(eta.support(), options.coarse_per_axis);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto jet = jets(nodes.point(i));
    r.kconvex_margin = std::min({r.kconvex_margin, sigma_j(jet.sym, 1), sigma_j(jet.sym, 2)});
  }
  return r;
}

namespace {

struct GridPairing {
  double f = 0.0, e = 0.0, margin = std::numeric_limits<double>::infinity();
};

GridPairing grid_pairing(const FieldSystem& s, const GridFunction& u, const Cutoff& eta) {
  const auto box = region_for(u.lattice, eta.support().lo(), eta.support().hi(), 2);
  const auto jg = kernels::parallel::jets(kernels::FieldCoefficients(s), u.lattice, u.values, box.begin, box.counts);
  const std::size_t total = jg.nodes();
  std::vector<double> w(total);
  if (eta.kind() == Cutoff::Kind::indicator) {
    w = domain_weights(jg.lattice, eta.support());
  } else {
    const double cell = jg.lattice.cell_volume();
    std::vector<double> x(s.n());
    for (std::size_t o = 0; o < total; ++o) {
      jg.lattice.point(o, x);
      w[o] = eta(x) * cell;
    }
  }
  std::vector<double> f(total), e(total);
  double margin = std::numeric_limits<double>::infinity();
#pragma omp parallel for schedule(static) reduction(min : margin)
  for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(total); ++q) {
    const auto o = static_cast<std::size_t>(q);
    const auto so = second_order(jg, o);
    f[o] = so.s2;
    e[o] = so.e2;
    if (w[o] > 0.0) margin = std::min({margin, so.s1, so.s2});
  }
  return {weighted_sum(w, f), weighted_sum(w, e), margin};
}

}  // namespace

PairingResult pairing(const FieldSystem& s, const GridFunction& u, const Cutoff& eta, double alpha,
                      const PairingOptions& options) {
  if (u.dimension() != s.n() || eta.dimension() != s.n()) throw DimensionMismatch("pairing: dimensions differ");
  const auto fine = grid_pairing(s, u, eta);
  PairingResult r;
  r.eta_id = eta.id();
  r.alpha = alpha;
  r.f2_part = fine.f;
  r.e2_part = fine.e;
  r.value = fine.f + alpha * fine.e;
  r.kconvex_margin = fine.margin;
  r.resolution = *std::max_element(u.lattice.h.begin(), u.lattice.h.end());
  if (options.error_estimate) {
    const auto coarse = grid_pairing(s, coarsen(u), eta);
    r.error_estimate = (std::abs(fine.f - coarse.f) + std::abs(alpha) * std::abs(fine.e - coarse.e)) / 3.0;
  }
  return r;
}

// ---------------------------------------------------------------- L1 norms and weights

std::vector<double> domain_weights(const Lattice& lattice, const Domain& domain) {
  const std::size_t n = lattice.dimension();
  if (domain.dimension() != n) throw DimensionMismatch("domain and lattice dimensions differ");
  std::vector<double> w(lattice.size(), 0.0);
  if (domain.shape() == Domain::Shape::box) {
    std::vector<std::vector<double>> axis(n);
    for (std::size_t d = 0; d < n; ++d) axis[d] = axis_weights(lattice, d, domain.lo()[d], domain.hi()[d]);
    for (std::size_t o = 0; o < w.size(); ++o) {
      std::size_t rem = o;
      double v = 1.0;
      for (std::size_t d = n; d-- > 0;) {
        v *= axis[d][rem % lattice.counts[d]];
        rem /= lattice.counts[d];
      }
      w[o] = v;
    }
    return w;
  }
  const double cell = lattice.cell_volume();
  std::vector<double> x(n);
  for (std::size_t o = 0; o < w.size(); ++o) {
    lattice.point(o, x);
    if (domain.contains(x)) w[o] = cell;
  }
  return w;
}

L1Pair l1_pair(const GridFunction& a, const GridFunction& b, const Domain& region) {
  if (a.dimension() != region.dimension() || b.dimension() != region.dimension())
    throw DimensionMismatch("l1_pair: dimensions differ");
  const auto ba = region_for(a.lattice, region.lo(), region.hi(), 0);
  const auto bb = region_for(b.lattice, region.lo(), region.hi(), 0);
  const Lattice la = a.lattice.sub(ba.begin, ba.counts), lb = b.lattice.sub(bb.begin, bb.counts);
  for (std::size_t d = 0; d < region.dimension(); ++d)
    if (la.counts[d] != lb.counts[d] || std::abs(la.lo[d] - lb.lo[d]) > 1e-9 * la.h[d] ||
        std::abs(la.h[d] - lb.h[d]) > 1e-12 * la.h[d])
      throw RejectedInput("l1_pair: grids do not share nodes on the region");
  const auto va = extract(a, ba), vb = extract(b, bb);
  const auto w = domain_weights(la, region);
  std::vector<double> diff(va.size()), sum(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) {
    diff[i] = std::abs(va[i] - vb[i]);
    sum[i] = std::abs(va[i] + vb[i]);
  }
  return {weighted_sum(w, diff), weighted_sum(w, sum)};
}

double l1_norm(const GridFunction& g, const Domain& region) {
  const auto box = region_for(g.lattice, region.lo(), region.hi(), 0);
  auto v = extract(g, box);
  for (auto& x : v) x = std::abs(x);
  return weighted_sum(domain_weights(g.lattice.sub(box.begin, box.counts), region), v);
}

// ---------------------------------------------------------------- local bounds

bool LocalBoundsReport::finite() const {
  return std::isfinite(sup_ratio) && std::isfinite(gradient_ratio) && std::isfinite(energy_ratio) &&
         std::isfinite(f2_ratio);
}

namespace {

ExponentReport check_exponents(const FieldSystem& s, const LocalBoundsOptions& o) {
  const auto Q = o.Q ? o.Q : s.homogeneous_dimension();
  if (!Q) throw RejectedInput("local bounds need a homogeneous dimension Q for this system");
  auto rep = exponent_report(o.k, static_cast<int>(s.m()), *Q);
  if (!(o.q >= 1.0) || !rep.q_gradient_max.admits(o.q))
    throw RejectedInput("q = " + short_fmt(o.q) + " outside [1, " + rep.q_gradient_max.to_string() + ")");
  if (!(o.r >= 0.0) || !rep.r_energy_max.admits(o.r))
    throw RejectedInput("r = " + short_fmt(o.r) + " outside [0, " + rep.r_energy_max.to_string() + ")");
  return rep;
}

// Shared tail: values on the outer region, jets on the inner region.
LocalBoundsReport finish_bounds(const GridFunction& u, const JetGrid& jg, const Domain& inner,
                                const Domain& outer, const LocalBoundsOptions& o, ExponentReport exps) {
  LocalBoundsReport rep;
  rep.exponents = std::move(exps);
  rep.h = *std::max_element(u.lattice.h.begin(), u.lattice.h.end());
  rep.l1_outer = l1_norm(u, outer);
  const auto inner_box = region_for(u.lattice, jg.lattice.lo, [&] {
    std::vector<double> hi(u.dimension());
    for (std::size_t d = 0; d < hi.size(); ++d) hi[d] = jg.lattice.coordinate(d, jg.lattice.counts[d] - 1);
    return hi;
  }(), 0);
  const auto values = extract(u, inner_box);
  const auto w = domain_weights(jg.lattice, inner);
  const std::size_t total = jg.nodes(), m = jg.m;
  const bool q_inf = std::isinf(o.q);
  std::vector<double> gq(total), en(total), f2(total);
  double sup = 0.0, gmax = 0.0, margin = std::numeric_limits<double>::infinity(), scale = 1.0;
  Matrix<double> sym(m, m, 0.0);
  for (std::size_t node = 0; node < total; ++node) {
    if (w[node] <= 0.0) continue;
    double g2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) g2 += jg.g(i, node) * jg.g(i, node);
    const double gn = std::sqrt(g2);
    const auto so = second_order(jg, node);
    sup = std::max(sup, values[node]);
    gmax = std::max(gmax, gn);
    gq[node] = q_inf ? 0.0 : std::pow(gn, o.q);
    en[node] = (o.r == 0.0 ? 1.0 : std::pow(gn, o.r)) * so.s1;
    f2[node] = so.s2 + 0.75 * so.e2;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) sym(i, j) = 0.5 * (jg.r(i, j, node) + jg.r(j, i, node));
    for (std::size_t j = 1; j <= static_cast<std::size_t>(o.k); ++j) {
      const double sj = sigma_j(sym, j);
      margin = std::min(margin, sj);
      scale = std::max(scale, std::abs(sj));
    }
  }
  if (margin < -o.convexity_tol * scale)
    throw RejectedInput("u is not " + std::to_string(o.k) + "-convex on the inner domain (margin " + short_fmt(margin) + ")");
  rep.kconvex_margin = margin;
  rep.sup_inner = sup;
  rep.gradient_norm = q_inf ? gmax : std::pow(weighted_sum(w, gq), 1.0 / o.q);
  rep.energy = weighted_sum(w, en);
  rep.f2_integral = weighted_sum(w, f2);
  const double l1 = rep.l1_outer;
  rep.sup_ratio = sup / l1;
  rep.gradient_ratio = rep.gradient_norm / l1;
  rep.energy_ratio = rep.energy / std::pow(l1, 1.0 + o.r);
  rep.f2_ratio = rep.f2_integral / (l1 * l1);
  return rep;
}

void check_nesting(const FieldSystem& s, const Domain& inner, const Domain& outer) {
  if (inner.dimension() != s.n() || outer.dimension() != s.n()) throw DimensionMismatch("local bounds: dimensions differ");
  if (!compactly_inside(inner, outer)) throw RejectedInput("inner domain is not compactly contained in the outer domain");
}

}  // namespace

LocalBoundsReport local_bounds(const FieldSystem& s, const GridFunction& u, const Domain& inner, const Domain& outer,
                               const LocalBoundsOptions& options) {
  check_nesting(s, inner, outer);
  auto exps = check_exponents(s, options);
  const auto box = region_for(u.lattice, inner.lo(), inner.hi(), 2);
  const auto jg = kernels::parallel::jets(kernels::FieldCoefficients(s), u.lattice, u.values, box.begin, box.counts);
  return finish_bounds(u, jg, inner, outer, options, std::move(exps));
}

LocalBoundsReport local_bounds(const FieldSystem& s, const Polynomial& u, const Domain& inner, const Domain& outer,
                               const LocalBoundsOptions& options) {
  check_nesting(s, inner, outer);
  auto exps = check_exponents(s, options);
  const auto g = sample_to_grid(Target::polynomial(u), lattice_for(Domain::box(outer.lo(), outer.hi()), options.h));
  const auto box = region_for(g.lattice, inner.lo(), inner.hi(), 0);
  const std::size_t m = s.m();
  JetGrid jg;
  jg.lattice = g.lattice.sub(box.begin, box.counts);
  jg.m = m;
  const std::size_t total = jg.lattice.size();
  jg.grad.resize(m * total);
  jg.full.resize(m * m * total);
  const auto hess = full_hessian(s, u);
  const auto grad = horizontal_gradient(s, u);
  std::vector<CompiledPolynomial> cg, cr;
  for (const auto& p : grad) cg.emplace_back(p);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) cr.emplace_back(hess.full(i, j));
#pragma omp parallel
  {
    std::vector<double> x(s.n());
#pragma omp for schedule(static)
    for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(total); ++q) {
      const auto o = static_cast<std::size_t>(q);
      jg.lattice.point(o, x);
      for (std::size_t i = 0; i < m; ++i) jg.grad[i * total + o] = cg[i](x);
      for (std::size_t e = 0; e < m * m; ++e) jg.full[e * total + o] = cr[e](x);
    }
  }
  return finish_bounds(g, jg, inner, outer, options, std::move(exps));
}

// ---------------------------------------------------------------- ladder experiment

bool LadderResult::gaps_decrease(std::size_t a) const {
  for (std::size_t i = 1; i + 1 < rows.size(); ++i)
    if (!(rows[i].gap[a] < rows[i - 1].gap[a])) return false;
  return true;
}

double LadderResult::final_relative_gap(std::size_t a) const {
  if (rows.size() < 2) return 0.0;
  return rows[rows.size() - 2].gap[a] / std::abs(rows.back().pairing[a]);
}

double LadderResult::f2_ratio_spread() const {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : rows) {
    lo = std::min(lo, r.f2_ratio);
    hi = std::max(hi, r.f2_ratio);
  }
  return hi / lo;
}

LadderResult weak_continuity_experiment(const FieldSystem& s, const Target& target, const Cutoff& eta,
                                        const LadderOptions& o) {
  const std::size_t n = s.n();
  if (target.dimension() != n || eta.dimension() != n) throw DimensionMismatch("ladder: dimensions differ");
  if (o.eps_ladder.size() < 2) throw RejectedInput("ladder needs at least two mollification scales");
  for (std::size_t i = 1; i < o.eps_ladder.size(); ++i)
    if (!(o.eps_ladder[i] < o.eps_ladder[i - 1])) throw RejectedInput("ladder must be strictly decreasing");
  if (o.alphas.empty()) throw RejectedInput("ladder needs at least one alpha");
  if (!(o.eps_ladder.back() >= 2.0 * o.h * (1.0 - 1e-12))) throw RejectedInput("ladder needs eps >= 2h");

  // Cube around the support, aligned so that its centre is a node.
  const auto& sup = eta.support();
  std::vector<double> c(n);
  double half = 0.0;
  for (std::size_t d = 0; d < n; ++d) {
    c[d] = 0.5 * (sup.lo()[d] + sup.hi()[d]);
    half = std::max(half, 0.5 * (sup.hi()[d] - sup.lo()[d]));
  }
  const auto cells = static_cast<std::size_t>(std::ceil((half + o.eps_ladder.front()) / o.h - 1e-9)) + 6;
  Lattice base;
  for (std::size_t d = 0; d < n; ++d) {
    base.counts.push_back(2 * cells + 1);
    base.lo.push_back(c[d] - static_cast<double>(cells) * o.h);
    base.h.push_back(o.h);
  }
  const auto sampled = sample_to_grid(target, base, o.max_nodes);

  LadderResult res;
  res.target = target.describe();
  res.eta_id = eta.id();
  res.alphas = o.alphas;
  std::vector<GridFunction> grids;
  for (double eps : o.eps_ladder) grids.push_back(mollify(sampled, eps));

  const Domain region = Domain::box(sup.lo(), sup.hi());
  const Domain inner = Domain::cube(c, 0.5 * half);
  LocalBoundsOptions lb;
  lb.k = 2;
  lb.q = 1.0;
  lb.r = 0.0;
  lb.Q = s.homogeneous_dimension().value_or(static_cast<int>(n));
  lb.convexity_tol = std::numeric_limits<double>::infinity();
  PairingOptions po;
  po.error_estimate = o.error_estimates;

  std::vector<PairingResult> pr;
  for (const auto& g : grids) pr.push_back(pairing(s, g, eta, 0.0, po));
  const auto& ref = pr.back();
  for (std::size_t i = 0; i < grids.size(); ++i) {
    LadderRow row;
    row.eps = o.eps_ladder[i];
    const auto l1 = l1_pair(grids[i], grids.back(), region);
    row.l1_delta = l1.delta;
    row.l1_mass = l1.mass;
    for (double a : o.alphas) {
      const double v = pr[i].f2_part + a * pr[i].e2_part;
      row.pairing.push_back(v);
      row.gap.push_back(std::abs(v - (ref.f2_part + a * ref.e2_part)));
      row.error_estimate.push_back(pr[i].error_estimate);
    }
    row.kconvex_margin = pr[i].kconvex_margin;
    row.f2_ratio = local_bounds(s, grids[i], inner, region, lb).f2_ratio;
    if (row.kconvex_margin < -o.margin_tol && res.valid) {
      res.valid = false;
      res.invalid_reason = "mollification at eps = " + short_fmt(row.eps) + " is not 2-convex (margin " +
                           short_fmt(row.kconvex_margin) + ")";
    }
    res.rows.push_back(std::move(row));
  }
  return res;
}

// ---------------------------------------------------------------- file format

void write_grid(std::ostream& out, const GridFunction& g) {
  const std::size_t n = g.dimension();
  out << n << '\n';
  for (std::size_t d = 0; d < n; ++d)
    out << fmt(g.lattice.lo[d]) << ' ' << fmt(g.lattice.coordinate(d, g.lattice.counts[d] - 1)) << ' '
        << g.lattice.counts[d] << '\n';
  for (std::size_t d = 0; d < n; ++d) out << (d ? " " : "") << fmt(g.lattice.h[d]);
  out << '\n' << "provenance " << g.provenance << '\n';
  for (double v : g.values) out << fmt(v) << '\n';
}

namespace {

double parse_double(std::string_view tok, std::size_t line) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw ParseError("expected a number, got '" + std::string(tok) + "'", line);
  return v;
}

}  // namespace

GridFunction read_grid(std::istream& in) {
  std::string text;
  std::size_t line_no = 0;
  auto next = [&](const char* what) {
    if (!std::getline(in, text)) throw ParseError(std::string("unexpected end of file, expected ") + what, line_no + 1);
    ++line_no;
    return text;
  };
  auto tokens = [](const std::string& s) {
    std::vector<std::string> t;
    std::istringstream is(s);
    for (std::string w; is >> w;) t.push_back(w);
    return t;
  };
  GridFunction g;
  const auto head = tokens(next("dimension"));
  if (head.size() != 1) throw ParseError("expected the dimension", line_no);
  const double nd = parse_double(head[0], line_no);
  if (!(nd >= 1.0 && nd == std::floor(nd))) throw ParseError("dimension must be a positive integer", line_no);
  const auto n = static_cast<std::size_t>(nd);
  std::vector<double> hi(n);
  for (std::size_t d = 0; d < n; ++d) {
    const auto t = tokens(next("axis line"));
    if (t.size() != 3) throw ParseError("axis line needs 'lo hi count'", line_no);
    g.lattice.lo.push_back(parse_double(t[0], line_no));
    hi[d] = parse_double(t[1], line_no);
    const double count = parse_double(t[2], line_no);
    if (!(count >= 2.0 && count == std::floor(count))) throw ParseError("count must be an integer >= 2", line_no);
    g.lattice.counts.push_back(static_cast<std::size_t>(count));
  }
  const auto ht = tokens(next("spacing"));
  if (ht.size() != n) throw ParseError("expected one spacing per axis", line_no);
  for (std::size_t d = 0; d < n; ++d) {
    const double h = parse_double(ht[d], line_no);
    const double expect = (hi[d] - g.lattice.lo[d]) / static_cast<double>(g.lattice.counts[d] - 1);
    if (!(h > 0) || std::abs(h - expect) > 1e-9 * std::abs(expect))
      throw ParseError("spacing inconsistent with the axis extent and count", line_no);
    g.lattice.h.push_back(h);
  }
  const std::string prov = next("provenance");
  if (prov.rfind("provenance", 0) != 0) throw ParseError("expected a provenance line", line_no);
  g.provenance = prov.size() > 11 ? prov.substr(11) : "loaded";
  const std::size_t total = g.lattice.size();
  g.values.reserve(total);
  while (g.values.size() < total) {
    const auto t = tokens(next("value"));
    if (t.size() != 1) throw ParseError("expected one value per line", line_no);
    g.values.push_back(parse_double(t[0], line_no));
  }
  while (std::getline(in, text)) {
    ++line_no;
    if (!tokens(text).empty()) throw ParseError("trailing data after the last value", line_no);
  }
  return g;
}

}  // namespace subhess
