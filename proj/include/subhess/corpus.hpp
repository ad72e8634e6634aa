#pragma once

// Seeded random inputs shared by the CLI, the acceptance suite and the
// experiments. Uniform draws are built from raw 64-bit words so that streams
// are identical across standard library implementations.

#include <cstdint>
#include <random>
#include <vector>

#include "subhess/sympoly.hpp"

namespace subhess {

// SplitMix64 finaliser; derives independent per-task seeds from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  // [0, 1)
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
  // Inclusive range.
  long uniform_int(long lo, long hi);
  double normal();

 private:
  std::mt19937_64 engine_;
};

// `count` random rational polynomials on R^n of total degree <= max_degree,
// each with up to `terms` terms, numerators in [-5, 5] and denominators in [1, 4].
std::vector<Polynomial> random_corpus(std::size_t n, std::size_t count, int max_degree, std::uint64_t seed,
                                      int terms = 8);

std::vector<std::vector<double>> random_points(std::size_t n, std::size_t count, double radius, std::uint64_t seed);

}  // namespace subhess
