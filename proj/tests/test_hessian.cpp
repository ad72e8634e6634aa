#include <catch_amalgamated.hpp>

#include <random>

#include "subhess/hessian.hpp"
#include "test_support.hpp"

using namespace subhess;

namespace {

Polynomial P(const char* text, std::size_t n) { return parse_polynomial(text, n); }

Matrix<Polynomial> constant_matrix(std::size_t n, std::initializer_list<std::initializer_list<const char*>> rows) {
  Matrix<Polynomial> a(rows.size(), rows.size(), Polynomial(n));
  std::size_t i = 0;
  for (const auto& row : rows) {
    std::size_t j = 0;
    for (const char* e : row) a(i, j++) = P(e, n);
    ++i;
  }
  return a;
}

Matrix<double> random_matrix(std::mt19937_64& rng, std::size_t m, bool symmetric) {
  Matrix<double> a(m, m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) a(i, j) = testing::uniform(rng, -1, 1);
  if (symmetric)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i);
  return a;
}

// The divergence-form operator written from traces and products of the full
// Hessian entries, without the sym/commutator split.
Polynomial f2_first_form(const HessianPair& h) {
  const std::size_t m = h.m();
  Polynomial tr(h.full(0, 0).dimension());
  for (std::size_t i = 0; i < m; ++i) tr += h.full(i, i);
  Polynomial cross(tr.dimension()), skew(tr.dimension());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      cross += h.full(i, j) * h.full(j, i);
      const auto d = h.full(i, j) - h.full(j, i);
      skew += d * d;
    }
  return (tr * tr - cross + skew * Rational(1, 2)) * Rational(1, 2);
}

}  // namespace

TEST_CASE("full_hessian examples", "[hessian]") {
  const auto h1 = heisenberg(1);
  {
    const auto h = full_hessian(h1, P("x3", 3));
    REQUIRE(h.full == constant_matrix(3, {{"0", "1/2"}, {"-1/2", "0"}}));
    REQUIRE(h.sym == constant_matrix(3, {{"0", "0"}, {"0", "0"}}));
    REQUIRE(h.commutator(0, 1) == P("1", 3));
  }
  {
    const auto h = full_hessian(h1, P("(x1^2 + x2^2)/2", 3));
    REQUIRE(h.full == constant_matrix(3, {{"1", "0"}, {"0", "1"}}));
    REQUIRE(h.sym == h.full);
    REQUIRE(h.commutator(0, 1).is_zero());
  }
  {
    const auto h = full_hessian(euclidean(3), P("x1^2 + 2*x1*x2 - 3*x3^2 + x2*x3", 3));
    REQUIRE(h.full == constant_matrix(3, {{"2", "2", "0"}, {"2", "0", "1"}, {"0", "1", "-6"}}));
    REQUIRE(h.sym == h.full);
  }
  REQUIRE_THROWS_AS(full_hessian(h1, P("x1", 2)), DimensionMismatch);
}

TEST_CASE("HessianPair invariants on random polynomials", "[hessian][property]") {
  std::mt19937_64 rng(31);
  for (const auto& s : {heisenberg(1), heisenberg(2), engel()}) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto u = testing::random_polynomial(rng, s.n(), 4);
      const auto h = full_hessian(s, u);
      for (std::size_t i = 0; i < s.m(); ++i)
        for (std::size_t j = i + 1; j < s.m(); ++j) {
          REQUIRE(poly_is_zero(h.sym(i, j) - h.sym(j, i)));
          REQUIRE(h.full(i, j) == h.sym(i, j) + h.commutator(i, j) * Rational(1, 2));
          REQUIRE(h.full(j, i) == h.sym(i, j) - h.commutator(i, j) * Rational(1, 2));
          REQUIRE(h.commutator(i, j) == commutator(s[i], s[j]).apply(u));
        }
    }
  }
}

TEST_CASE("sigma_j examples", "[hessian]") {
  Matrix<Rational> eye(3, 3, Rational(0));
  for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1;
  REQUIRE(sigma_j(eye, 2) == 3);
  REQUIRE(sigma_j(eye, 0) == 1);
  REQUIRE(sigma_j(eye, 2, {0}) == 1);
  REQUIRE(sigma_j(eye, 1, {0}) == 2);
  REQUIRE(sigma_j(eye, 3, {0}) == 0);
  REQUIRE_THROWS_AS(sigma_j(eye, 4), IndexOutOfRange);
  REQUIRE_THROWS_AS(sigma_j(eye, 1, {3}), IndexOutOfRange);
  Matrix<Rational> a(3, 3, Rational(0));
  const int v[3][3] = {{2, -1, 3}, {4, 0, 1}, {-2, 5, 1}};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) a(i, j) = v[i][j];
  REQUIRE(determinant(a) == 2 * (0 - 5) + 1 * (4 + 2) + 3 * (20 - 0));
  REQUIRE(sigma_j(a, 3) == determinant(a));
}

TEST_CASE("principal-minor S_j matches Jacobi eigenvalues", "[hessian][oracle]") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_matrix(rng, 4, true);
    std::vector<double> flat(16);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) flat[i * 4 + j] = a(i, j);
    const auto lambda = testing::jacobi_eigenvalues(flat, 4);
    for (std::size_t j = 0; j <= 4; ++j)
      REQUIRE(std::abs(sigma_j(a, j) - testing::elementary_symmetric(lambda, j)) <= 1e-9);
  }
}

TEST_CASE("f2_family examples and first form", "[hessian]") {
  const auto h1 = heisenberg(1);
  REQUIRE(f2_family(h1, P("x3", 3), Rational(3, 4)) == P("3/4", 3));
  for (const auto& alpha : {Rational(0), Rational(1, 3), Rational(3, 4)})
    REQUIRE(f2_family(h1, P("(x1^2 + x2^2)/2", 3), alpha) == P("1", 3));
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = testing::random_polynomial(rng, 3, 4, 8);
    const auto h = full_hessian(h1, u);
    REQUIRE(f2_first_form(h) == f2_family(h, Rational(3, 4)));
    REQUIRE(f2_family(h, Rational(3, 4)) - f2_family(h, 0) == e2(h) * Rational(3, 4));
    REQUIRE(f2_family(h, 1) - f2_family(h, 0) == e2(h));
  }
}

TEST_CASE("f2_linearized examples", "[hessian]") {
  Matrix<Rational> eye(3, 3, Rational(0));
  for (std::size_t i = 0; i < 3; ++i) eye(i, i) = 1;
  Matrix<Rational> two_eye = eye;
  for (std::size_t i = 0; i < 3; ++i) two_eye(i, i) = 2;
  REQUIRE(f2_linearized(eye) == two_eye);
  Matrix<Rational> skew(2, 2, Rational(0));
  skew(0, 1) = Rational(1, 2);
  skew(1, 0) = Rational(-1, 2);
  const auto l = f2_linearized(skew);
  REQUIRE(l(0, 0) == 0);
  REQUIRE(l(0, 1) == Rational(3, 2));
  REQUIRE(l(1, 0) == Rational(-3, 2));
  REQUIRE(l(1, 1) == 0);
  REQUIRE_THROWS_AS(f2_linearized(Matrix<Rational>(2, 3, Rational(0))), DimensionMismatch);
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix<Rational> a(3, 3, Rational(0));
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = i; j < 3; ++j) a(i, j) = a(j, i) = testing::rat(testing::uniform_int(rng, -9, 9), 4);
    REQUIRE(f2_linearized(a) == f2_classical_linearized(a));
  }
}

TEST_CASE("linearization contracted with r gives twice the operator", "[hessian][property]") {
  std::mt19937_64 rng(71);
  for (std::size_t m : {2u, 3u, 4u}) {
    for (int trial = 0; trial < 50; ++trial) {
      Matrix<Rational> r(m, m, Rational(0));
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j)
          r(i, j) = testing::rat(testing::uniform_int(rng, -20, 20), testing::uniform_int(rng, 1, 6));
      const auto l = f2_linearized(r);
      Rational contracted = 0;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) contracted += l(i, j) * r(i, j);
      Matrix<Rational> sym(m, m, Rational(0));
      Rational skew = 0;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
          sym(i, j) = (r(i, j) + r(j, i)) / 2;
          if (i < j) skew += (r(i, j) - r(j, i)) * (r(i, j) - r(j, i));
        }
      const Rational f2 = sigma_j(sym, 2) + Rational(3, 4) * skew;
      REQUIRE(contracted == 2 * f2);
    }
  }
}

TEST_CASE("principal minors of the full matrix carry a quarter of the commutator energy", "[hessian][oracle]") {
  std::mt19937_64 rng(81);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto r = random_matrix(rng, 4, false);
    const double lhs = sigma_j(r, 2);
    Matrix<double> sym(4, 4, 0.0);
    double skew = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        sym(i, j) = 0.5 * (r(i, j) + r(j, i));
        if (i < j) skew += (r(i, j) - r(j, i)) * (r(i, j) - r(j, i));
      }
    const double rhs = sigma_j(sym, 2) + 0.25 * skew;
    REQUIRE(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST_CASE("symmetric input makes the family independent of alpha", "[hessian][property]") {
  std::mt19937_64 rng(91);
  const auto e = euclidean(3);
  for (int trial = 0; trial < 10; ++trial) {
    const auto u = testing::random_polynomial(rng, 3, 4);
    REQUIRE(f2_family(e, u, 0) == f2_family(e, u, Rational(3, 4)));
    REQUIRE(e2(e, u).is_zero());
    REQUIRE(f2_star(e, u) == f2_family(e, u, 0));
  }
}

TEST_CASE("f2_star", "[hessian]") {
  std::mt19937_64 rng(101);
  const auto h1 = heisenberg(1);
  for (int trial = 0; trial < 5; ++trial) {
    const auto u = testing::random_polynomial(rng, 3, 4);
    REQUIRE(f2_star(h1, u) == f2_family(h1, u, Rational(3, 4)));
  }
  const auto g = engel();
  const auto u = P("x4", 4);
  // X_2 x4 = x1^2/2, Y_2 x4 = 1.
  REQUIRE(f2_star(g, u) == f2_family(g, u, Rational(3, 4)) + P("x1^2/4", 4));
}

TEST_CASE("laplacians", "[hessian]") {
  const auto h1 = heisenberg(1);
  REQUIRE(delta_x(h1, P("(x1^2 + x2^2)/2", 3)) == P("2", 3));
  const std::vector<double> x{0.3, -0.7, 0.2};
  REQUIRE(laplacian(h1, P("x3", 3), LaplacianKind::delta_inf, x) == Catch::Approx(0.0).margin(1e-15));
  for (std::size_t n : {2u, 3u}) {
    const auto e = euclidean(n);
    Polynomial u(n);
    for (std::size_t i = 0; i < n; ++i) u += Polynomial::variable(n, i) * Polynomial::variable(n, i) * Rational(1, 2);
    std::vector<double> pt(n, 0.0);
    pt[0] = 0.6;
    pt[n - 1] += -0.3;
    const double r = std::sqrt(0.36 + 0.09);
    for (double p : {1.5, 2.0, 3.0, 4.5}) {
      REQUIRE(laplacian(e, u, LaplacianKind::delta_p, pt, p) ==
              Catch::Approx(std::pow(r, p - 2) * (static_cast<double>(n) + p - 2)).epsilon(1e-12));
    }
    const std::vector<double> origin(n, 0.0);
    REQUIRE(laplacian(e, u, LaplacianKind::delta_p, origin, 3.0) == 0.0);
    REQUIRE(laplacian(e, u, LaplacianKind::delta_p, origin, 2.0) == Catch::Approx(static_cast<double>(n)));
    REQUIRE_THROWS_AS(laplacian(e, u, LaplacianKind::delta_p, origin, 1.5), SingularPoint);
  }
}

TEST_CASE("delta_p matches the divergence form by finite differences", "[hessian][oracle]") {
  // X_i(|Xu|^{p-2} X_i u) computed from the polynomial Xu by central
  // differences along each field's flow direction at the point.
  const auto h1 = heisenberg(1);
  const auto u = P("x1^2 + 1/2*x2^2 + x1*x3 + 1/3*x2^3", 3);
  const double p = 3.5;
  const auto grad = horizontal_gradient(h1, u);
  auto flux = [&](std::size_t i, const std::vector<double>& y) {
    double g2 = 0.0;
    for (const auto& g : grad) g2 += std::pow(g.evaluate(std::span<const double>(y)), 2);
    return std::pow(g2, 0.5 * (p - 2)) * grad[i].evaluate(std::span<const double>(y));
  };
  const std::vector<double> x{0.4, -0.3, 0.25};
  const double h = 1e-5;
  double div = 0.0;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto b = h1[i].evaluate(x);
    auto xp = x, xm = x;
    for (std::size_t k = 0; k < 3; ++k) {
      xp[k] += h * b[k];
      xm[k] -= h * b[k];
    }
    div += (flux(i, xp) - flux(i, xm)) / (2 * h);
  }
  REQUIRE(laplacian(h1, u, LaplacianKind::delta_p, x, p) == Catch::Approx(div).epsilon(1e-6));
}

TEST_CASE("is_k_convex", "[hessian]") {
  std::mt19937_64 rng(111);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 20; ++i) pts.push_back(testing::random_point(rng, 3, 1.0));
  const auto h1 = heisenberg(1);
  REQUIRE(is_k_convex(h1, P("(x1^2 + x2^2)/2", 3), 2, pts, 1e-12).holds);
  REQUIRE(is_k_convex(h1, P("x3", 3), 2, pts, 1e-12).holds);
  std::vector<std::vector<double>> pts2;
  for (int i = 0; i < 5; ++i) pts2.push_back(testing::random_point(rng, 2, 1.0));
  const auto r = is_k_convex(euclidean(2), P("-(x1^2 + x2^2)/2", 2), 1, pts2, 1e-12);
  REQUIRE_FALSE(r.holds);
  REQUIRE(r.worst_j == 1);
  REQUIRE(r.worst_value == Catch::Approx(-2.0));
  REQUIRE_THROWS_AS(is_k_convex(h1, P("x1", 3), 3, pts, 0.0), RejectedInput);
  REQUIRE_THROWS_AS(is_k_convex(h1, P("x1", 3), 1, {}, 0.0), RejectedInput);
}

TEST_CASE("degenerate ellipticity for 2-convex functions", "[hessian][property]") {
  std::mt19937_64 rng(121);
  const auto h2 = heisenberg(2);
  int tested = 0;
  for (int trial = 0; trial < 200 && tested < 30; ++trial) {
    const auto u = testing::random_polynomial(rng, 5, 2, 8);
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 10; ++i) pts.push_back(testing::random_point(rng, 5, 1.0));
    const JetEvaluator jets(h2, u);
    if (!is_k_convex(jets, 2, pts, 0.0).holds) continue;
    ++tested;
    for (const auto& x : pts) REQUIRE(f2_ellipticity_margin(jets(x).sym) >= -1e-9);
  }
  REQUIRE(tested >= 5);
}
