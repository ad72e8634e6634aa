#pragma once

// Random corpora and independent oracles shared by the test binaries.

#include <cmath>
#include <random>
#include <vector>

#include <catch_amalgamated.hpp>

#include "subhess/sympoly.hpp"

namespace subhess::testing {

// Uniform in [lo, hi) built from raw 64-bit draws so values do not depend on
// the standard library's distribution implementation.
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

inline long uniform_int(std::mt19937_64& rng, long lo, long hi) {
  return lo + static_cast<long>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

// mpq_class(n, d) does not reduce; GMP needs canonical operands.
inline Rational rat(long n, long d) {
  Rational r(n, d);
  r.canonicalize();
  return r;
}

// Random rational polynomial of total degree <= max_degree with small
// numerators and denominators.
inline Polynomial random_polynomial(std::mt19937_64& rng, std::size_t n, int max_degree, int terms = 6) {
  Polynomial p(n);
  for (int t = 0; t < terms; ++t) {
    Exponent e(n, 0);
    const long deg = uniform_int(rng, 0, max_degree);
    for (long d = 0; d < deg; ++d) e[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long>(n) - 1))] += 1;
    const long num = uniform_int(rng, -5, 5);
    const long den = uniform_int(rng, 1, 4);
    if (num != 0) p.add_term(e, Rational(num, den));
  }
  return p;
}

inline std::vector<double> random_point(std::mt19937_64& rng, std::size_t n, double radius) {
  std::vector<double> x(n);
  for (auto& v : x) v = uniform(rng, -radius, radius);
  return x;
}

// Cyclic Jacobi eigenvalues of a symmetric matrix (row-major). Independent of
// the principal-minor route and of Eigen.
inline std::vector<double> jacobi_eigenvalues(std::vector<double> a, std::size_t m) {
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < m; ++p)
      for (std::size_t q = p + 1; q < m; ++q) off += a[p * m + q] * a[p * m + q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t q = p + 1; q < m; ++q) {
        const double apq = a[p * m + q];
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a[q * m + q] - a[p * m + p]) / (2 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (std::size_t k = 0; k < m; ++k) {
          const double akp = a[k * m + p], akq = a[k * m + q];
          a[k * m + p] = c * akp - s * akq;
          a[k * m + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < m; ++k) {
          const double apk = a[p * m + k], aqk = a[q * m + k];
          a[p * m + k] = c * apk - s * aqk;
          a[q * m + k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(m);
  for (std::size_t i = 0; i < m; ++i) ev[i] = a[i * m + i];
  return ev;
}

// S_j of a vector by the subset-sum recurrence, independent of principal minors.
inline double elementary_symmetric(const std::vector<double>& lambda, std::size_t j) {
  std::vector<double> e(lambda.size() + 1, 0.0);
  e[0] = 1.0;
  for (double l : lambda)
    for (std::size_t k = lambda.size(); k >= 1; --k) e[k] += e[k - 1] * l;
  return j < e.size() ? e[j] : 0.0;
}

}  // namespace subhess::testing

template <>
struct Catch::StringMaker<subhess::Polynomial> {
  static std::string convert(const subhess::Polynomial& p) { return p.to_string(); }
};
