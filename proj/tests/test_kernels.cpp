#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "subhess/hessian.hpp"
#include "subhess/kernels.hpp"
#include "test_support.hpp"

using namespace subhess;
using namespace subhess::kernels;

namespace {

// Serial and parallel kernels sum in different orders; they agree to rounding.
constexpr double kAgree = 1e-12;

Lattice make_lattice(std::vector<std::size_t> counts, double h) {
  Lattice l;
  l.counts = std::move(counts);
  l.lo.assign(l.counts.size(), 0.0);
  l.h.assign(l.counts.size(), h);
  for (std::size_t d = 0; d < l.counts.size(); ++d) l.lo[d] = -0.5 * h * static_cast<double>(l.counts[d] - 1);
  return l;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace

TEST_CASE("lattice indexing") {
  const auto l = make_lattice({3, 4, 5}, 0.1);
  CHECK(l.size() == 60);
  CHECK(l.strides() == std::vector<std::size_t>{20, 5, 1});
  std::vector<double> x(3);
  l.point(20 * 2 + 5 * 1 + 3, x);
  CHECK(x[0] == Catch::Approx(l.coordinate(0, 2)));
  CHECK(x[1] == Catch::Approx(l.coordinate(1, 1)));
  CHECK(x[2] == Catch::Approx(l.coordinate(2, 3)));
  const auto s = l.sub({1, 1, 1}, {2, 2, 2});
  CHECK(s.lo[0] == Catch::Approx(l.coordinate(0, 1)));
  CHECK(l.cell_volume() == Catch::Approx(1e-3));
}

TEST_CASE("serial and parallel sums agree") {
  std::mt19937_64 rng(31);
  for (std::size_t size : {0u, 1u, 7u, 4096u, 4097u, 50000u}) {
    std::vector<double> v(size);
    for (auto& e : v) e = testing::uniform(rng, -1, 1);
    CHECK(rel(serial::tree_sum(v), parallel::tree_sum(v)) <= kAgree);
  }
}

TEST_CASE("serial and parallel sampling, integration and convolution agree") {
  std::mt19937_64 rng(32);
  const auto f = testing::random_polynomial(rng, 3, 4, 8);
  const CompiledPolynomial cf(f);
  const auto l = make_lattice({14, 15, 16}, 0.05);
  std::vector<double> a(l.size()), b(l.size());
  serial::sample(cf, l, a);
  parallel::sample(cf, l, b);
  CHECK(a == b);

  NodeSet nodes;
  nodes.dim = 3;
  nodes.coords.resize(3 * l.size());
  nodes.weights.assign(l.size(), l.cell_volume());
  for (std::size_t i = 0; i < l.size(); ++i) l.point(i, std::span<double>(nodes.coords.data() + 3 * i, 3));
  CHECK(rel(serial::integrate(cf, nodes), parallel::integrate(cf, nodes)) <= kAgree);

  Stencil st;
  st.dim = 3;
  st.radius = 2;
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j)
      for (int k = -2; k <= 2; ++k) {
        st.offsets.insert(st.offsets.end(), {i, j, k});
        st.weights.push_back(testing::uniform(rng, 0, 1));
      }
  const std::size_t out_size = 10 * 11 * 12;
  std::vector<double> ca(out_size), cb(out_size);
  serial::convolve(l, a, st, ca);
  parallel::convolve(l, a, st, cb);
  for (std::size_t i = 0; i < out_size; ++i) REQUIRE(rel(ca[i], cb[i]) <= kAgree);

  std::vector<double> wrong(3);
  CHECK_THROWS_AS(parallel::convolve(l, a, st, wrong), DimensionMismatch);
}

TEST_CASE("lattice jets are exact on quadratics with linear field coefficients") {
  std::mt19937_64 rng(33);
  const auto s = heisenberg(1);
  const auto u = testing::random_polynomial(rng, 3, 2, 8);
  const auto l = make_lattice({11, 11, 11}, 0.1);
  std::vector<double> values(l.size());
  serial::sample(CompiledPolynomial(u), l, values);
  const FieldCoefficients b(s);
  const std::vector<std::size_t> begin{2, 2, 2}, counts{7, 7, 7};
  const auto js = serial::jets(b, l, values, begin, counts);
  const auto jp = parallel::jets(b, l, values, begin, counts);
  const JetEvaluator exact(s, u);
  const auto h = full_hessian(s, u);
  std::vector<double> x(3);
  for (std::size_t node = 0; node < js.nodes(); ++node) {
    js.lattice.point(node, x);
    const auto jet = exact(x);
    for (std::size_t i = 0; i < 2; ++i) {
      REQUIRE(rel(js.g(i, node), jp.g(i, node)) <= kAgree);
      CHECK(js.g(i, node) == Catch::Approx(jet.grad[i]).margin(1e-10));
      for (std::size_t j = 0; j < 2; ++j) {
        REQUIRE(rel(js.r(i, j, node), jp.r(i, j, node)) <= kAgree);
        CHECK(js.r(i, j, node) == Catch::Approx(h.full(i, j).evaluate(std::span<const double>(x))).margin(1e-9));
      }
    }
  }
  CHECK_THROWS_AS(serial::jets(b, l, values, {1, 2, 2}, counts), RejectedInput);
}

TEST_CASE("lattice jets converge at second order on the Engel group") {
  const auto s = engel();
  const auto u = parse_polynomial("x1^3 * x2 + x4^2 + x2 * x3", 4);
  const FieldCoefficients b(s);
  const auto h = full_hessian(s, u);
  std::vector<double> errs;
  for (double step : {0.04, 0.02}) {
    const auto l = make_lattice({9, 9, 9, 9}, step);
    std::vector<double> values(l.size());
    parallel::sample(CompiledPolynomial(u), l, values);
    const auto jg = parallel::jets(b, l, values, {4, 4, 4, 4}, {1, 1, 1, 1});
    std::vector<double> x(4);
    jg.lattice.point(0, x);
    double e = 0.0;
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j)
        e = std::max(e, std::abs(jg.r(i, j, 0) - h.full(i, j).evaluate(std::span<const double>(x))));
    errs.push_back(e);
  }
  // Halving h cuts the error by about 4.
  CHECK(errs[1] < 0.35 * errs[0] + 1e-12);
}
