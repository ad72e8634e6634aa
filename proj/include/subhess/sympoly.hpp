#pragma once

// Exact multivariate polynomials over the rationals.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>

#include "subhess/error.hpp"

namespace subhess {

using Rational = mpq_class;
using Exponent = std::vector<std::uint32_t>;

std::uint32_t total_degree(const Exponent& e);

// Graded lexicographic order: higher total degree first, ties broken by
// comparing exponents of x1, x2, ... with the larger exponent first.
struct GradedLex {
  bool operator()(const Exponent& a, const Exponent& b) const;
};

class Polynomial {
 public:
  using TermMap = std::map<Exponent, Rational, GradedLex>;

  explicit Polynomial(std::size_t dimension = 1);

  static Polynomial constant(std::size_t dimension, const Rational& c);
  // x_{index+1}; indices are 0-based in the C++ API.
  static Polynomial variable(std::size_t dimension, std::size_t index);
  static Polynomial monomial(Exponent exponent, const Rational& c);

  std::size_t dimension() const { return dimension_; }
  const TermMap& terms() const { return terms_; }
  std::size_t term_count() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  // -1 for the zero polynomial.
  int total_degree() const;
  Rational coefficient(const Exponent& e) const;
  // Constant term.
  Rational constant_term() const;

  // Adds c * x^e, pruning the term if the coefficient cancels.
  void add_term(const Exponent& e, const Rational& c);

  Polynomial derivative(std::size_t index) const;

  Rational evaluate(std::span<const Rational> x) const;
  double evaluate(std::span<const double> x) const;

  std::string to_string() const;

  Polynomial& operator+=(const Polynomial& q);
  Polynomial& operator-=(const Polynomial& q);
  Polynomial& operator*=(const Polynomial& q);
  Polynomial& operator*=(const Rational& c);

  friend Polynomial operator+(Polynomial p, const Polynomial& q) { return p += q; }
  friend Polynomial operator-(Polynomial p, const Polynomial& q) { return p -= q; }
  friend Polynomial operator*(const Polynomial& p, const Polynomial& q);
  friend Polynomial operator*(Polynomial p, const Rational& c) { return p *= c; }
  friend Polynomial operator*(const Rational& c, Polynomial p) { return p *= c; }
  friend Polynomial operator-(Polynomial p);
  friend bool operator==(const Polynomial& p, const Polynomial& q);

 private:
  void require_same_dimension(const Polynomial& q, const char* op) const;

  std::size_t dimension_;
  TermMap terms_;
};

enum class CombineOp { add, mul, scale };

Polynomial poly_combine(CombineOp op, const Polynomial& p, const Polynomial& q);
Polynomial poly_combine(CombineOp op, const Polynomial& p, const Rational& c);
Polynomial poly_diff(const Polynomial& p, std::size_t index);
bool poly_is_zero(const Polynomial& p);

// Parses the canonical serialization and the usual hand-written forms:
// sums/differences/products of rationals (`3/2`, `0.25`), variables `x1`..`xn`,
// non-negative integer powers `^k`, parentheses, and division by constants.
Polynomial parse_polynomial(std::string_view text, std::size_t dimension);

Rational parse_rational(std::string_view text);

// Polynomial lowered to doubles for evaluation at many points.
class CompiledPolynomial {
 public:
  CompiledPolynomial() = default;
  explicit CompiledPolynomial(const Polynomial& p);

  std::size_t dimension() const { return dimension_; }
  bool is_zero() const { return coeffs_.empty(); }
  double operator()(std::span<const double> x) const;

 private:
  std::size_t dimension_ = 0;
  std::uint32_t max_exponent_ = 0;
  std::vector<double> coeffs_;
  // Flattened (variable, exponent) factor lists; term t uses
  // factors_[offsets_[t] .. offsets_[t+1]).
  std::vector<std::uint32_t> offsets_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> factors_;
};

}  // namespace subhess
