// Serial reference kernels against their OpenMP twins on lattice sizes
// typical of the mollification ladder.

#include <benchmark/benchmark.h>

#include <vector>

#include "subhess/corpus.hpp"
#include "subhess/kernels.hpp"
#include "subhess/measures.hpp"

using namespace subhess;
using namespace subhess::kernels;

namespace {

Lattice cube_lattice(std::size_t per_axis) {
  const double h = 1.0 / static_cast<double>(per_axis - 1);
  return Lattice{{per_axis, per_axis, per_axis}, {-0.5, -0.5, -0.5}, {h, h, h}};
}

const CompiledPolynomial& test_polynomial() {
  static const CompiledPolynomial p(parse_polynomial("x1^2 * x3 + 1/2*x2^4 - 3*x1*x2*x3 + x3^2 + 1", 3));
  return p;
}

std::vector<double> sampled(const Lattice& l) {
  std::vector<double> v(l.size());
  parallel::sample(test_polynomial(), l, v);
  return v;
}

template <bool Parallel>
void BM_tree_sum(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(Parallel ? parallel::tree_sum(v) : serial::tree_sum(v));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

template <bool Parallel>
void BM_sample(benchmark::State& state) {
  const auto l = cube_lattice(static_cast<std::size_t>(state.range(0)));
  std::vector<double> out(l.size());
  for (auto _ : state) {
    if (Parallel)
      parallel::sample(test_polynomial(), l, out);
    else
      serial::sample(test_polynomial(), l, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * l.size()));
}

template <bool Parallel>
void BM_integrate(benchmark::State& state) {
  const auto l = cube_lattice(static_cast<std::size_t>(state.range(0)));
  NodeSet nodes;
  nodes.dim = 3;
  std::vector<double> x(3);
  for (std::size_t i = 0; i < l.size(); ++i) {
    l.point(i, x);
    nodes.coords.insert(nodes.coords.end(), x.begin(), x.end());
    nodes.weights.push_back(l.cell_volume());
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(Parallel ? parallel::integrate(test_polynomial(), nodes)
                                      : serial::integrate(test_polynomial(), nodes));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * nodes.size()));
}

template <bool Parallel>
void BM_convolve(benchmark::State& state) {
  const auto l = cube_lattice(static_cast<std::size_t>(state.range(0)));
  const auto v = sampled(l);
  const auto st = mollifier_stencil(l.h, 4.0 * l.h[0]);
  const std::size_t inner = l.counts[0] - 2 * st.radius;
  std::vector<double> out(inner * inner * inner);
  for (auto _ : state) {
    if (Parallel)
      parallel::convolve(l, v, st, out);
    else
      serial::convolve(l, v, st, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * out.size()));
}

template <bool Parallel>
void BM_jets(benchmark::State& state) {
  const auto l = cube_lattice(static_cast<std::size_t>(state.range(0)));
  const auto v = sampled(l);
  const FieldCoefficients b(heisenberg(1));
  const std::size_t c = l.counts[0] - 4;
  const std::vector<std::size_t> begin{2, 2, 2}, counts{c, c, c};
  for (auto _ : state) {
    auto g = Parallel ? parallel::jets(b, l, v, begin, counts) : serial::jets(b, l, v, begin, counts);
    benchmark::DoNotOptimize(g.full.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * c * c * c));
}

}  // namespace

BENCHMARK(BM_tree_sum<false>)->Name("tree_sum/serial")->Arg(1 << 22);
BENCHMARK(BM_tree_sum<true>)->Name("tree_sum/parallel")->Arg(1 << 22);
BENCHMARK(BM_sample<false>)->Name("sample/serial")->Arg(64)->Arg(128);
BENCHMARK(BM_sample<true>)->Name("sample/parallel")->Arg(64)->Arg(128);
BENCHMARK(BM_integrate<false>)->Name("integrate/serial")->Arg(64);
BENCHMARK(BM_integrate<true>)->Name("integrate/parallel")->Arg(64);
BENCHMARK(BM_convolve<false>)->Name("convolve/serial")->Arg(64);
BENCHMARK(BM_convolve<true>)->Name("convolve/parallel")->Arg(64);
BENCHMARK(BM_jets<false>)->Name("jets/serial")->Arg(64);
BENCHMARK(BM_jets<true>)->Name("jets/parallel")->Arg(64);

BENCHMARK_MAIN();
