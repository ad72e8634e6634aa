#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "subhess/hessian.hpp"
#include "subhess/identities.hpp"
#include "subhess/measures.hpp"
#include "subhess/quadrature.hpp"
#include "test_support.hpp"

using namespace subhess;

namespace {

Polynomial P(const char* text, std::size_t n) { return parse_polynomial(text, n); }

double cell_sum_abs(const GridFunction& g) {
  double s = 0.0;
  for (double v : g.values) s += std::abs(v);
  return s * g.lattice.cell_volume();
}

// Slope of log y against log x by least squares.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

Target max_of_quadratics() {
  const auto q1 = P("1/2 * x1^2 + 1/2 * x2^2", 3);
  return Target::max_of({q1, q1 + P("-1/10 * x1 + 1/4 * x3", 3)});
}

}  // namespace

TEST_CASE("sampling onto a lattice") {
  const auto ones = sample_to_grid(Target::polynomial(Polynomial::constant(2, 1)), Domain::box({0, 0}, {1, 2}), 0.25);
  CHECK(ones.lattice.counts == std::vector<std::size_t>{5, 9});
  for (double v : ones.values) CHECK(v == 1.0);
  const auto line = sample_to_grid(Target::polynomial(P("x1", 1)), Domain::box({0}, {1}), 0.5);
  CHECK(line.values == std::vector<double>{0.0, 0.5, 1.0});
  CHECK_THROWS_AS(sample_to_grid(Target::polynomial(P("x1", 3)), Domain::cube({0, 0, 0}, 1), 0.001, 1000000),
                  RejectedInput);
  CHECK_THROWS_AS(sample_to_grid(Target::polynomial(P("x1", 1)), Domain::box({0}, {1}), 0.0), RejectedInput);
}

TEST_CASE("lattice quadrature of sampled polynomials matches symbolic integrals") {
  std::mt19937_64 rng(41);
  const auto box = Domain::box({-0.5, 0.0, 0.25}, {0.5, 1.0, 0.75});
  for (int t = 0; t < 5; ++t) {
    const auto p = testing::random_polynomial(rng, 3, 4, 6);
    const double exact = exact_integral(p, box);
    double prev = 0.0;
    for (double h : {0.125, 0.0625}) {
      const auto g = sample_to_grid(Target::polynomial(p), box, h);
      const auto w = domain_weights(g.lattice, box);
      double q = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) q += w[i] * g.values[i];
      const double err = std::abs(q - exact);
      CHECK(err <= 1e-3 * std::max(1.0, std::abs(exact)));
      if (h < 0.1 && prev > 1e-13) CHECK(err <= prev);
      prev = err;
    }
  }
}

TEST_CASE("mollifier stencil") {
  const auto st = mollifier_stencil({0.1, 0.1}, 0.3);
  CHECK(st.radius == 3);
  double total = 0.0;
  for (double w : st.weights) {
    CHECK(w > 0.0);
    total += w;
  }
  CHECK(total == Catch::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(mollifier_stencil({0.1, 0.1}, 0.15), RejectedInput);
}

TEST_CASE("mollification reproduces constants and affine functions") {
  const auto dom = Domain::cube({0, 0, 0}, 0.5);
  const auto c = mollify(sample_to_grid(Target::polynomial(Polynomial::constant(3, 2)), dom, 0.05), 0.15);
  CHECK(c.lattice.counts == std::vector<std::size_t>{15, 15, 15});
  for (double v : c.values) CHECK(v == Catch::Approx(2.0).epsilon(1e-13));
  const auto a = P("3 * x1 - 2 * x2 + 1/2 * x3 + 1", 3);
  const auto g = mollify(sample_to_grid(Target::polynomial(a), dom, 0.05), 0.15);
  const CompiledPolynomial ca(a);
  std::vector<double> x(3);
  for (std::size_t i = 0; i < g.values.size(); ++i) {
    g.lattice.point(i, x);
    REQUIRE(g.values[i] == Catch::Approx(ca(x)).margin(1e-12));
  }
  CHECK_THROWS_AS(mollify(sample_to_grid(Target::polynomial(a), dom, 0.05), 0.6), RejectedInput);
}

TEST_CASE("mollification error on a quadratic is second order in eps") {
  const auto u = P("x1^2 + 1/2 * x2^2 - x1 * x2", 2);
  const auto g = sample_to_grid(Target::polynomial(u), Domain::cube({0, 0}, 0.5), 0.0125);
  std::vector<double> eps{0.2, 0.1, 0.05}, err;
  const CompiledPolynomial cu(u);
  std::vector<double> x(2);
  for (double e : eps) {
    const auto m = mollify(g, e);
    double worst = 0.0;
    for (std::size_t i = 0; i < m.values.size(); ++i) {
      m.lattice.point(i, x);
      worst = std::max(worst, std::abs(m.values[i] - cu(x)));
    }
    err.push_back(worst);
  }
  CHECK(loglog_slope(eps, err) >= 1.8);
}

TEST_CASE("mollification contracts the L1 norm") {
  std::mt19937_64 rng(42);
  const auto p = testing::random_polynomial(rng, 3, 3, 8);
  const auto g = sample_to_grid(Target::polynomial(p), Domain::cube({0, 0, 0}, 0.5), 0.05);
  for (double eps : {0.1, 0.2}) CHECK(cell_sum_abs(mollify(g, eps)) <= cell_sum_abs(g) * (1 + 1e-12));
}

TEST_CASE("mollification preserves the sub-Laplacian margin on H1") {
  const auto s = heisenberg(1);
  const auto u = P("x1^2 + 2 * x2^2 + x1 * x3 + 1/4 * x3^2", 3);
  const double h = 0.025;
  const auto g = sample_to_grid(Target::polynomial(u), Domain::cube({0, 0, 0}, 0.5), h);
  const kernels::FieldCoefficients b(s);
  auto min_laplacian = [&](const GridFunction& f, const Domain& region) {
    const auto jg = kernels::parallel::jets(b, f.lattice, f.values, {2, 2, 2},
                                            {f.lattice.counts[0] - 4, f.lattice.counts[1] - 4, f.lattice.counts[2] - 4});
    const auto wj = domain_weights(jg.lattice, region);
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t o = 0; o < jg.nodes(); ++o)
      if (wj[o] > 0) lo = std::min(lo, jg.r(0, 0, o) + jg.r(1, 1, o));
    return lo;
  };
  const Domain region = Domain::cube({0, 0, 0}, 0.2);
  const double before = min_laplacian(g, region);
  for (double eps : {0.05, 0.1, 0.2}) CHECK(min_laplacian(mollify(g, eps), region) >= before - 10 * h * h);
}

TEST_CASE("cutoff normalization is exact") {
  for (std::size_t n : {2u, 3u, 4u}) {
    const auto eta = Cutoff::bump(std::vector<double>(n, 0.1), 0.4);
    CHECK(eta.mass() == Catch::Approx(1.0).epsilon(1e-14));
    CHECK(exact_integral(eta.polynomial(), eta.support()) == Catch::Approx(1.0).epsilon(1e-10));
  }
  const auto eta = Cutoff::bump({0, 0, 0}, 0.4);
  // 4 pi * 16/315 * rho^3 for n = 3.
  CHECK(eta.scale() == Catch::Approx(1.0 / (4.0 * std::numbers::pi * 16.0 / 315.0 * 0.064)).epsilon(1e-13));
  CHECK(eta(std::vector<double>{0.5, 0, 0}) == 0.0);
  CHECK(eta(std::vector<double>{0, 0, 0}) == Catch::Approx(eta.scale()));
}

TEST_CASE("pairing of the central coordinate on H1") {
  const auto s = heisenberg(1);
  const auto eta = Cutoff::bump({0, 0, 0}, 0.4);
  const auto u = P("x3", 3);
  const auto sym = pairing(s, u, eta, 0.75);
  CHECK(std::abs(sym.value - 0.75) <= std::max(sym.error_estimate * 3, 1e-10) + 1e-3);
  CHECK(sym.f2_part == Catch::Approx(0.0).margin(1e-12));
  const auto g = sample_to_grid(Target::polynomial(u), Domain::cube({0, 0, 0}, 0.6), 0.025);
  const auto grid = pairing(s, g, eta, 0.75);
  CHECK(grid.value == Catch::Approx(0.75).epsilon(1e-3));
  CHECK(grid.error_estimate >= 0.0);
}

TEST_CASE("pairing with identity Hessian and commuting derivatives equals S_2(I) times the mass") {
  const auto eta = Cutoff::bump({0.1, -0.1, 0.0}, 0.35);
  for (double alpha : {0.0, 0.5, 2.0}) {
    const auto e3 = pairing(euclidean(3), P("1/2 * x1^2 + 1/2 * x2^2 + 1/2 * x3^2", 3), eta, alpha);
    CHECK(e3.value == Catch::Approx(3.0).epsilon(1e-3));
    const auto h1 = pairing(heisenberg(1), P("1/2 * x1^2 + 1/2 * x2^2", 3), eta, alpha);
    CHECK(h1.value == Catch::Approx(1.0).epsilon(1e-3));
    const auto g = sample_to_grid(Target::polynomial(P("1/2 * x1^2 + 1/2 * x2^2", 3)), Domain::cube({0, 0, 0}, 0.6), 0.025);
    CHECK(pairing(heisenberg(1), g, eta, alpha).value == Catch::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("grid and symbolic pairings agree at second order") {
  std::mt19937_64 rng(43);
  const auto s = heisenberg(1);
  const auto eta = Cutoff::bump({0, 0, 0}, 0.3);
  for (int t = 0; t < 3; ++t) {
    const auto u = testing::random_polynomial(rng, 3, 4, 8);
    // The integrand is a polynomial on the ball: exact moments are the oracle.
    const double exact = exact_integral(eta.polynomial() * f2_family(s, u, testing::rat(3, 4)), eta.support());
    const auto sym = pairing(s, u, eta, 0.75);
    CHECK(std::abs(sym.value - exact) <= 3.0 * sym.error_estimate + 1e-12);
    std::vector<double> errs;
    for (double h : {0.04, 0.02}) {
      const auto g = sample_to_grid(Target::polynomial(u), Domain::cube({0, 0, 0}, 0.5), h);
      errs.push_back(std::abs(pairing(s, g, eta, 0.75, {.error_estimate = false}).value - exact));
    }
    CHECK(errs[1] <= errs[0] / 3.0 + 1e-9);
  }
}

TEST_CASE("pairing is affine in alpha") {
  std::mt19937_64 rng(44);
  const auto s = heisenberg(1);
  const auto eta = Cutoff::bump({0, 0, 0}, 0.3);
  const auto u = testing::random_polynomial(rng, 3, 4, 8);
  const auto g = sample_to_grid(Target::polynomial(u), Domain::cube({0, 0, 0}, 0.5), 0.04);
  const double p0 = pairing(s, g, eta, 0.0).value, p1 = pairing(s, g, eta, 1.0).value;
  for (double a : {0.25, 0.75, -2.0, 10.0}) {
    const double pa = pairing(s, g, eta, a).value;
    CHECK(std::abs(pa - (p0 + a * (p1 - p0))) <= 1e-12 * std::max({1.0, std::abs(pa), std::abs(p1 - p0)}));
  }
}

TEST_CASE("measure monotonicity for admissible pairs with the indicator cutoff") {
  const auto s = heisenberg(1);
  const auto ball = Domain::ball({0.05, 0.0, -0.05}, 0.5);
  const auto eta = Cutoff::indicator(ball);
  const auto u = P("x1^2 + x2^2 + x3^2", 3);
  for (int t = 1; t <= 3; ++t) {
    const auto v = u + ball_bump({0.05, 0.0, -0.05}, 0.5, 1) * testing::rat(t, 20);
    const auto pu = pairing(s, u, eta, 0.75), pv = pairing(s, v, eta, 0.75);
    CHECK(pv.value <= pu.value + pu.error_estimate + pv.error_estimate);
  }
}

TEST_CASE("grid file round trip and parse errors") {
  std::mt19937_64 rng(45);
  const auto g = mollify(sample_to_grid(Target::polynomial(testing::random_polynomial(rng, 2, 3)),
                                        Domain::box({-0.5, 0.0}, {0.5, 0.75}), 0.05),
                         0.1);
  std::stringstream ss;
  write_grid(ss, g);
  const auto back = read_grid(ss);
  CHECK(back.values == g.values);
  CHECK(back.lattice.counts == g.lattice.counts);
  CHECK(back.provenance == g.provenance);
  for (std::size_t d = 0; d < 2; ++d) {
    CHECK(back.lattice.lo[d] == g.lattice.lo[d]);
    CHECK(back.lattice.h[d] == Catch::Approx(g.lattice.h[d]).epsilon(1e-15));
  }

  auto parse_line = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_grid(in);
    } catch (const ParseError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  CHECK(parse_line("1\n0 1 3\n0.5\nprovenance x\n0\n1\n") == 7);
  CHECK(parse_line("1\n0 1 3\n0.25\nprovenance x\n0\n1\n2\n") == 3);
  CHECK(parse_line("1\n0 1\n") == 2);
  CHECK(parse_line("1\n0 1 3\n0.5\nprovenance x\n0\nabc\n2\n") == 6);
  CHECK(parse_line("1\n0 1 3\n0.5\nprovenance x\n0\n1\n2\n3\n") == 8);
}

TEST_CASE("local bounds on the unit box are finite and resolution-stable") {
  const auto s = heisenberg(1);
  const auto u = P("1/2 * x1^2 + 1/2 * x2^2", 3);
  const auto outer = Domain::box({0, 0, 0}, {1, 1, 1});
  const auto inner = outer.inset(0.25);
  std::vector<LocalBoundsReport> reps;
  for (double h : {0.05, 0.025}) {
    LocalBoundsOptions o;
    o.h = h;
    reps.push_back(local_bounds(s, u, inner, outer, o));
    const auto g = sample_to_grid(Target::polynomial(u), outer, h);
    const auto grid = local_bounds(s, g, inner, outer, o);
    CHECK(grid.f2_ratio == Catch::Approx(reps.back().f2_ratio).epsilon(1e-10));
  }
  for (const auto& r : reps) CHECK(r.finite());
  auto close = [](double a, double b) { return std::abs(a - b) <= 5e-4 * std::abs(b); };
  CHECK(close(reps[0].sup_ratio, reps[1].sup_ratio));
  CHECK(close(reps[0].gradient_ratio, reps[1].gradient_ratio));
  CHECK(close(reps[0].energy_ratio, reps[1].energy_ratio));
  CHECK(close(reps[0].f2_ratio, reps[1].f2_ratio));
  // Exact values: int |u| over the unit box is 1/3, F_2 = 1.
  CHECK(reps[1].l1_outer == Catch::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(reps[1].f2_integral == Catch::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("local bound ratios are invariant under u -> 2u") {
  const auto s = heisenberg(1);
  const auto u = P("1/2 * x1^2 + 1/2 * x2^2 + 1/10 * x1", 3);
  const auto outer = Domain::cube({0.5, 0.5, 0.5}, 0.5);
  const auto inner = Domain::ball({0.5, 0.5, 0.5}, 0.3);
  LocalBoundsOptions o;
  o.h = 0.05;
  const auto a = local_bounds(s, u, inner, outer, o);
  const auto b = local_bounds(s, u * Rational(2), inner, outer, o);
  CHECK(b.sup_ratio == Catch::Approx(a.sup_ratio).epsilon(1e-12));
  CHECK(b.gradient_ratio == Catch::Approx(a.gradient_ratio).epsilon(1e-12));
  CHECK(b.energy_ratio == Catch::Approx(a.energy_ratio).epsilon(1e-12));
  CHECK(b.f2_ratio == Catch::Approx(a.f2_ratio).epsilon(1e-12));
}

TEST_CASE("local bounds reject inadmissible input") {
  const auto s = heisenberg(1);
  const auto u = P("1/2 * x1^2 + 1/2 * x2^2", 3);
  const auto outer = Domain::box({0, 0, 0}, {1, 1, 1});
  const auto inner = outer.inset(0.25);
  LocalBoundsOptions o;
  o.h = 0.05;
  o.k = 1;
  o.q = 1.5;  // beyond 4/3
  o.r = 0.0;
  CHECK_THROWS_AS(local_bounds(s, u, inner, outer, o), RejectedInput);
  o.q = 1.2;
  CHECK_THROWS_AS(local_bounds(s, u, inner, outer, o), RejectedInput);  // r < 0 exclusive for k = 1
  o = LocalBoundsOptions{};
  o.h = 0.05;
  CHECK_THROWS_AS(local_bounds(s, u, outer, outer, o), RejectedInput);
  CHECK_THROWS_AS(local_bounds(s, P("-1 * x1^2 - x2^2", 3), inner, outer, o), RejectedInput);
  const FieldSystem custom("custom", heisenberg(1).fields());
  CHECK_THROWS_AS(local_bounds(custom, u, inner, outer, o), RejectedInput);
  o.Q = 4;
  CHECK_NOTHROW(local_bounds(custom, u, inner, outer, o));
}

TEST_CASE("ladder on a smooth target: gaps shrink like eps^2") {
  const auto s = heisenberg(1);
  LadderOptions o;
  o.h = 0.025;
  o.eps_ladder = {0.2, 0.1, 0.05};
  o.alphas = {0.75};
  const auto r = weak_continuity_experiment(s, Target::polynomial(P("1/2 * x1^2 + 1/2 * x2^2 + 1/12 * x1^4", 3)),
                                            Cutoff::bump({0, 0, 0}, 0.3), o);
  REQUIRE(r.valid);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].gap[0] >= 3.0 * r.rows[1].gap[0]);
  CHECK(r.rows[0].l1_delta > r.rows[1].l1_delta);
  CHECK(r.rows[2].gap[0] == 0.0);
}

TEST_CASE("ladder on the max of quadratics converges for every alpha") {
  const auto s = heisenberg(1);
  LadderOptions o;
  o.h = 0.025;
  o.eps_ladder = {0.2, 0.1, 0.05};
  o.alphas = {0.0, 0.25, 0.5, 0.75};
  const auto r = weak_continuity_experiment(s, max_of_quadratics(), Cutoff::bump({0, 0, 0}, 0.4), o);
  REQUIRE(r.valid);
  for (std::size_t a = 0; a < o.alphas.size(); ++a) CHECK(r.gaps_decrease(a));
  for (const auto& row : r.rows) CHECK(row.kconvex_margin >= -1e-6);
  CHECK(r.f2_ratio_spread() < 1.5);
}

TEST_CASE("ladder flags targets that are not 2-convex and rejects bad ladders") {
  const auto s = heisenberg(1);
  LadderOptions o;
  o.h = 0.05;
  o.eps_ladder = {0.2, 0.1};
  o.alphas = {0.0};
  const auto r = weak_continuity_experiment(s, Target::polynomial(P("-1/2 * x1^2 + x2^2", 3)), Cutoff::bump({0, 0, 0}, 0.3), o);
  CHECK_FALSE(r.valid);
  CHECK_FALSE(r.invalid_reason.empty());
  o.eps_ladder = {0.1, 0.2};
  CHECK_THROWS_AS(weak_continuity_experiment(s, max_of_quadratics(), Cutoff::bump({0, 0, 0}, 0.3), o), RejectedInput);
  o.eps_ladder = {0.2, 0.05};
  CHECK_THROWS_AS(weak_continuity_experiment(s, max_of_quadratics(), Cutoff::bump({0, 0, 0}, 0.3), o), RejectedInput);
}
