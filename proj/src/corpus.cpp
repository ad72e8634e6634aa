#include "subhess/corpus.hpp"

#include <cmath>
#include <numbers>

namespace subhess {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

long Rng::uniform_int(long lo, long hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<long>(engine_() % span);
}

double Rng::normal() {
  const double a = std::max(unit(), 1e-300);
  const double b = unit();
  return std::sqrt(-2.0 * std::log(a)) * std::cos(2.0 * std::numbers::pi * b);
}

std::vector<Polynomial> random_corpus(std::size_t n, std::size_t count, int max_degree, std::uint64_t seed, int terms) {
  Rng rng(seed);
  std::vector<Polynomial> out;
  out.reserve(count);
  while (out.size() < count) {
    Polynomial p(n);
    for (int t = 0; t < terms; ++t) {
      Exponent e(n, 0);
      const long deg = rng.uniform_int(0, max_degree);
      for (long d = 0; d < deg; ++d) e[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(n) - 1))] += 1;
      const long num = rng.uniform_int(-5, 5);
      const long den = rng.uniform_int(1, 4);
      if (num != 0) p.add_term(e, Rational(num, den));
    }
    if (!p.is_zero()) out.push_back(std::move(p));
  }
  return out;
}

std::vector<std::vector<double>> random_points(std::size_t n, std::size_t count, double radius, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> pts(count, std::vector<double>(n));
  for (auto& x : pts)
    for (auto& v : x) v = rng.uniform(-radius, radius);
  return pts;
}

}  // namespace subhess
