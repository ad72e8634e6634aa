#pragma once

// Data-parallel numerical kernels. Every kernel exists twice: kernels::serial
// is the plain reference used by tests, kernels::parallel is the OpenMP
// version used by the library. Parallel results do not depend on the thread
// count: work is split into fixed blocks and reduced in a fixed order.

#include <cstddef>
#include <span>
#include <vector>

#include "subhess/fields.hpp"

namespace subhess::kernels {

// Uniform lattice lo + idx * h, row-major with the last axis fastest.
struct Lattice {
  std::vector<std::size_t> counts;
  std::vector<double> lo;
  std::vector<double> h;

  std::size_t dimension() const { return counts.size(); }
  std::size_t size() const;
  std::vector<std::size_t> strides() const;
  double coordinate(std::size_t axis, std::size_t idx) const { return lo[axis] + static_cast<double>(idx) * h[axis]; }
  // Node coordinates of a flat index.
  void point(std::size_t flat, std::span<double> x) const;
  // Sub-lattice starting at index `begin` with `counts` nodes per axis.
  Lattice sub(const std::vector<std::size_t>& begin, const std::vector<std::size_t>& sub_counts) const;
  double cell_volume() const;
};

// Quadrature nodes with weights; coords are packed point after point.
struct NodeSet {
  std::size_t dim = 0;
  std::vector<double> coords;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  std::span<const double> point(std::size_t i) const { return {coords.data() + i * dim, dim}; }
};

// Convolution stencil: integer offsets (packed, `dim` per entry) and weights.
struct Stencil {
  std::size_t dim = 0;
  std::size_t radius = 0;  // max |offset| per axis
  std::vector<int> offsets;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

// b^{ik} of a field system lowered for node-wise evaluation; constant
// coefficients are folded.
class FieldCoefficients {
 public:
  explicit FieldCoefficients(const FieldSystem& s);
  std::size_t m() const { return m_; }
  std::size_t n() const { return n_; }
  bool is_zero(std::size_t i, std::size_t k) const { return kind_[i * n_ + k] == 0; }
  double operator()(std::size_t i, std::size_t k, std::span<const double> x) const {
    const std::size_t e = i * n_ + k;
    return kind_[e] == 1 ? constant_[e] : poly_[e](x);
  }

 private:
  std::size_t m_, n_;
  std::vector<int> kind_;  // 0 zero, 1 constant, 2 general
  std::vector<double> constant_;
  std::vector<CompiledPolynomial> poly_;
};

// Xu and the full matrix X_iX_ju on a lattice, from composed central
// differences. grad[i * N + node], full[(i * m + j) * N + node].
struct JetGrid {
  Lattice lattice;
  std::size_t m = 0;
  std::vector<double> grad;
  std::vector<double> full;

  std::size_t nodes() const { return lattice.size(); }
  double g(std::size_t i, std::size_t node) const { return grad[i * nodes() + node]; }
  double r(std::size_t i, std::size_t j, std::size_t node) const { return full[(i * m + j) * nodes() + node]; }
};

namespace serial {

// Pairwise summation.
double tree_sum(std::span<const double> v);
double integrate(const CompiledPolynomial& f, const NodeSet& nodes);
void sample(const CompiledPolynomial& f, const Lattice& lattice, std::span<double> out);
// out has counts - 2 * radius per axis.
void convolve(const Lattice& lattice, std::span<const double> in, const Stencil& stencil, std::span<double> out);
// Jets on the sub-lattice [begin, begin + counts); needs two cells of margin.
JetGrid jets(const FieldCoefficients& b, const Lattice& lattice, std::span<const double> values,
             const std::vector<std::size_t>& begin, const std::vector<std::size_t>& counts);

}  // namespace serial

namespace parallel {

// Sums fixed blocks of kBlock terms, then combines block sums pairwise.
inline constexpr std::size_t kBlock = 4096;
double tree_sum(std::span<const double> v);
double integrate(const CompiledPolynomial& f, const NodeSet& nodes);
void sample(const CompiledPolynomial& f, const Lattice& lattice, std::span<double> out);
void convolve(const Lattice& lattice, std::span<const double> in, const Stencil& stencil, std::span<double> out);
JetGrid jets(const FieldCoefficients& b, const Lattice& lattice, std::span<const double> values,
             const std::vector<std::size_t>& begin, const std::vector<std::size_t>& counts);

}  // namespace parallel

int max_threads();

}  // namespace subhess::kernels
