#include "subhess/kernels.hpp"

#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace subhess::kernels {

std::size_t Lattice::size() const {
  std::size_t s = 1;
  for (auto c : counts) s *= c;
  return s;
}

std::vector<std::size_t> Lattice::strides() const {
  std::vector<std::size_t> st(counts.size(), 1);
  for (std::size_t d = counts.size(); d-- > 1;) st[d - 1] = st[d] * counts[d];
  return st;
}

void Lattice::point(std::size_t flat, std::span<double> x) const {
  for (std::size_t d = counts.size(); d-- > 0;) {
    x[d] = coordinate(d, flat % counts[d]);
    flat /= counts[d];
  }
}

Lattice Lattice::sub(const std::vector<std::size_t>& begin, const std::vector<std::size_t>& sub_counts) const {
  if (begin.size() != dimension() || sub_counts.size() != dimension())
    throw DimensionMismatch("sub-lattice rank does not match lattice");
  Lattice out{sub_counts, lo, h};
  for (std::size_t d = 0; d < dimension(); ++d) {
    if (begin[d] + sub_counts[d] > counts[d]) throw IndexOutOfRange("sub-lattice exceeds lattice");
    out.lo[d] = coordinate(d, begin[d]);
  }
  return out;
}

double Lattice::cell_volume() const {
  double v = 1.0;
  for (double x : h) v *= x;
  return v;
}

FieldCoefficients::FieldCoefficients(const FieldSystem& s) : m_(s.m()), n_(s.n()) {
  kind_.resize(m_ * n_);
  constant_.assign(m_ * n_, 0.0);
  poly_.resize(m_ * n_);
  for (std::size_t i = 0; i < m_; ++i)
    for (std::size_t k = 0; k < n_; ++k) {
      const auto& b = s[i].coefficient(k);
      const std::size_t e = i * n_ + k;
      if (b.is_zero()) {
        kind_[e] = 0;
      } else if (b.is_constant()) {
        kind_[e] = 1;
        constant_[e] = b.constant_term().get_d();
      } else {
        kind_[e] = 2;
        poly_[e] = CompiledPolynomial(b);
      }
    }
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

double tree_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return tree_sum(v.first(half)) + tree_sum(v.subspan(half));
}

double integrate(const CompiledPolynomial& f, const NodeSet& nodes) {
  std::vector<double> terms(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) terms[i] = nodes.weights[i] * f(nodes.point(i));
  return tree_sum(terms);
}

void sample(const CompiledPolynomial& f, const Lattice& lattice, std::span<double> out) {
  if (out.size() != lattice.size()) throw DimensionMismatch("sample output has wrong size");
  std::vector<double> x(lattice.dimension());
  for (std::size_t i = 0; i < out.size(); ++i) {
    lattice.point(i, x);
    out[i] = f(x);
  }
}

void convolve(const Lattice& lattice, std::span<const double> in, const Stencil& stencil, std::span<double> out) {
  const std::size_t n = lattice.dimension();
  const std::size_t r = stencil.radius;
  Lattice outl = lattice;
  for (std::size_t d = 0; d < n; ++d) {
    if (lattice.counts[d] <= 2 * r) throw RejectedInput("convolution radius exhausts the lattice");
    outl.counts[d] = lattice.counts[d] - 2 * r;
  }
  if (out.size() != outl.size() || in.size() != lattice.size()) throw DimensionMismatch("convolution buffers have wrong size");
  const auto st = lattice.strides();
  std::vector<std::size_t> idx(n);
  for (std::size_t o = 0; o < out.size(); ++o) {
    std::size_t rem = o;
    for (std::size_t d = n; d-- > 0;) {
      idx[d] = rem % outl.counts[d] + r;
      rem /= outl.counts[d];
    }
    double acc = 0.0;
    for (std::size_t s = 0; s < stencil.size(); ++s) {
      std::size_t flat = 0;
      for (std::size_t d = 0; d < n; ++d)
        flat += static_cast<std::size_t>(static_cast<std::ptrdiff_t>(idx[d]) + stencil.offsets[s * n + d]) * st[d];
      acc += stencil.weights[s] * in[flat];
    }
    out[o] = acc;
  }
}

JetGrid jets(const FieldCoefficients& b, const Lattice& lattice, std::span<const double> values,
             const std::vector<std::size_t>& begin, const std::vector<std::size_t>& counts) {
  const std::size_t n = lattice.dimension();
  const std::size_t m = b.m();
  if (b.n() != n) throw DimensionMismatch("field system and lattice dimensions differ");
  if (values.size() != lattice.size()) throw DimensionMismatch("lattice values have wrong size");
  for (std::size_t d = 0; d < n; ++d)
    if (begin[d] < 2 || begin[d] + counts[d] + 2 > lattice.counts[d])
      throw RejectedInput("jets need two cells of margin around the output region");
  const auto st = lattice.strides();
  std::vector<double> x(n);
  // X_j u at flat index f by central differences.
  auto xu = [&](std::size_t j, std::size_t f) {
    lattice.point(f, x);
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (b.is_zero(j, k)) continue;
      acc += b(j, k, x) * ((values[f + st[k]] - values[f - st[k]]) / (2.0 * lattice.h[k]));
    }
    return acc;
  };
  JetGrid out;
  out.lattice = lattice.sub(begin, counts);
  out.m = m;
  const std::size_t total = out.lattice.size();
  out.grad.assign(m * total, 0.0);
  out.full.assign(m * m * total, 0.0);
  std::vector<std::size_t> idx(n);
  std::vector<double> y(n);
  for (std::size_t o = 0; o < total; ++o) {
    std::size_t rem = o;
    for (std::size_t d = n; d-- > 0;) {
      idx[d] = rem % counts[d] + begin[d];
      rem /= counts[d];
    }
    std::size_t f = 0;
    for (std::size_t d = 0; d < n; ++d) f += idx[d] * st[d];
    for (std::size_t i = 0; i < m; ++i) out.grad[i * total + o] = xu(i, f);
    lattice.point(f, y);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (b.is_zero(i, k)) continue;
          const double bik = b(i, k, y);
          acc += bik * ((xu(j, f + st[k]) - xu(j, f - st[k])) / (2.0 * lattice.h[k]));
        }
        out.full[(i * m + j) * total + o] = acc;
      }
  }
  return out;
}

}  // namespace serial

}  // namespace subhess::kernels
