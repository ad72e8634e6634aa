#include "subhess/kernels.hpp"

#include <algorithm>

namespace subhess::kernels::parallel {

namespace {

// Multi-index of flat index f in a box of the given counts, shifted by begin.
inline void unflatten(std::size_t f, const std::vector<std::size_t>& counts, const std::vector<std::size_t>& begin,
                      std::size_t* idx) {
  for (std::size_t d = counts.size(); d-- > 0;) {
    idx[d] = f % counts[d] + begin[d];
    f /= counts[d];
  }
}

}  // namespace

double tree_sum(std::span<const double> v) {
  const std::size_t blocks = (v.size() + kBlock - 1) / kBlock;
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t end = std::min(v.size(), (b + 1) * kBlock);
    double s = 0.0;
    for (std::size_t i = b * kBlock; i < end; ++i) s += v[i];
    partial[b] = s;
  }
  return serial::tree_sum(partial);
}

double integrate(const CompiledPolynomial& f, const NodeSet& nodes) {
  std::vector<double> terms(nodes.size());
  const auto count = static_cast<std::ptrdiff_t>(nodes.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    terms[k] = nodes.weights[k] * f(nodes.point(k));
  }
  return tree_sum(terms);
}

void sample(const CompiledPolynomial& f, const Lattice& lattice, std::span<double> out) {
  if (out.size() != lattice.size()) throw DimensionMismatch("sample output has wrong size");
  const std::size_t n = lattice.dimension();
  const auto count = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel
  {
    std::vector<double> x(n);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      lattice.point(static_cast<std::size_t>(i), x);
      out[static_cast<std::size_t>(i)] = f(x);
    }
  }
}

void convolve(const Lattice& lattice, std::span<const double> in, const Stencil& stencil, std::span<double> out) {
  const std::size_t n = lattice.dimension();
  const std::size_t r = stencil.radius;
  std::vector<std::size_t> oc(n), shift(n, r);
  for (std::size_t d = 0; d < n; ++d) {
    if (lattice.counts[d] <= 2 * r) throw RejectedInput("convolution radius exhausts the lattice");
    oc[d] = lattice.counts[d] - 2 * r;
  }
  std::size_t osize = 1;
  for (auto c : oc) osize *= c;
  if (out.size() != osize || in.size() != lattice.size()) throw DimensionMismatch("convolution buffers have wrong size");
  const auto st = lattice.strides();
  std::vector<std::ptrdiff_t> flat_off(stencil.size());
  for (std::size_t s = 0; s < stencil.size(); ++s) {
    std::ptrdiff_t f = 0;
    for (std::size_t d = 0; d < n; ++d) f += stencil.offsets[s * n + d] * static_cast<std::ptrdiff_t>(st[d]);
    flat_off[s] = f;
  }
  const std::size_t row = oc[n - 1];
  const auto rows = static_cast<std::ptrdiff_t>(osize / row);
  std::vector<std::size_t> row_counts(oc.begin(), oc.end() - 1);
  std::vector<std::size_t> row_shift(shift.begin(), shift.end() - 1);
#pragma omp parallel
  {
    std::vector<std::size_t> idx(n);
#pragma omp for schedule(static)
    for (std::ptrdiff_t q = 0; q < rows; ++q) {
      unflatten(static_cast<std::size_t>(q), row_counts, row_shift, idx.data());
      idx[n - 1] = r;
      std::size_t base = 0;
      for (std::size_t d = 0; d < n; ++d) base += idx[d] * st[d];
      double* dst = out.data() + static_cast<std::size_t>(q) * row;
      std::fill(dst, dst + row, 0.0);
      // One stencil entry at a time over the whole row: contiguous and vectorizable.
      for (std::size_t s = 0; s < stencil.size(); ++s) {
        const double w = stencil.weights[s];
        const double* src = in.data() + static_cast<std::ptrdiff_t>(base) + flat_off[s];
        for (std::size_t t = 0; t < row; ++t) dst[t] += w * src[t];
      }
    }
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

  // Stage 1: X_j u on the output region grown by one cell.
  std::vector<std::size_t> gb(n), gc(n);
  for (std::size_t d = 0; d < n; ++d) {
    gb[d] = begin[d] - 1;
    gc[d] = counts[d] + 2;
  }
  const Lattice glat = lattice.sub(gb, gc);
  const auto gst = glat.strides();
  const std::size_t gsize = glat.size();
  std::vector<double> g(m * gsize);
#pragma omp parallel
  {
    std::vector<std::size_t> idx(n);
    std::vector<double> x(n);
#pragma omp for schedule(static)
    for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(gsize); ++q) {
      const auto o = static_cast<std::size_t>(q);
      unflatten(o, gc, gb, idx.data());
      std::size_t f = 0;
      for (std::size_t d = 0; d < n; ++d) f += idx[d] * st[d];
      glat.point(o, x);
      for (std::size_t j = 0; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (b.is_zero(j, k)) continue;
          acc += b(j, k, x) * ((values[f + st[k]] - values[f - st[k]]) / (2.0 * lattice.h[k]));
        }
        g[j * gsize + o] = acc;
      }
    }
  }

  // Stage 2: X_i applied to X_j u on the output region.
  JetGrid out;
  out.lattice = lattice.sub(begin, counts);
  out.m = m;
  const std::size_t total = out.lattice.size();
  out.grad.assign(m * total, 0.0);
  out.full.assign(m * m * total, 0.0);
  std::vector<std::size_t> one(n, 1);
#pragma omp parallel
  {
    std::vector<std::size_t> idx(n);
    std::vector<double> y(n);
    std::vector<double> bik(n);
#pragma omp for schedule(static)
    for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(total); ++q) {
      const auto o = static_cast<std::size_t>(q);
      unflatten(o, counts, one, idx.data());
      std::size_t f = 0;
      for (std::size_t d = 0; d < n; ++d) f += idx[d] * gst[d];
      out.lattice.point(o, y);
      for (std::size_t i = 0; i < m; ++i) {
        out.grad[i * total + o] = g[i * gsize + f];
        for (std::size_t k = 0; k < n; ++k) bik[k] = b.is_zero(i, k) ? 0.0 : b(i, k, y);
        for (std::size_t j = 0; j < m; ++j) {
          const double* gj = g.data() + j * gsize;
          double acc = 0.0;
          for (std::size_t k = 0; k < n; ++k) {
            if (b.is_zero(i, k)) continue;
            acc += bik[k] * ((gj[f + gst[k]] - gj[f - gst[k]]) / (2.0 * lattice.h[k]));
          }
          out.full[(i * m + j) * total + o] = acc;
        }
      }
    }
  }
  return out;
}

}  // namespace subhess::kernels::parallel
