#include "subhess/sympoly.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numeric>

namespace subhess {

std::uint32_t total_degree(const Exponent& e) {
  return std::accumulate(e.begin(), e.end(), std::uint32_t{0});
}

bool GradedLex::operator()(const Exponent& a, const Exponent& b) const {
  const auto da = total_degree(a);
  const auto db = total_degree(b);
  if (da != db) return da > db;
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

Polynomial::Polynomial(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw DimensionMismatch("polynomial dimension must be positive");
}

Polynomial Polynomial::constant(std::size_t dimension, const Rational& c) {
  Polynomial p(dimension);
  p.add_term(Exponent(dimension, 0), c);
  return p;
}

Polynomial Polynomial::variable(std::size_t dimension, std::size_t index) {
  if (index >= dimension)
    throw IndexOutOfRange("variable index " + std::to_string(index + 1) + " outside 1.." +
                          std::to_string(dimension));
  Exponent e(dimension, 0);
  e[index] = 1;
  return monomial(std::move(e), Rational(1));
}

Polynomial Polynomial::monomial(Exponent exponent, const Rational& c) {
  Polynomial p(exponent.size());
  p.add_term(exponent, c);
  return p;
}

bool Polynomial::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && subhess::total_degree(terms_.begin()->first) == 0);
}

int Polynomial::total_degree() const {
  if (terms_.empty()) return -1;
  // Graded order puts the highest degree first.
  return static_cast<int>(subhess::total_degree(terms_.begin()->first));
}

Rational Polynomial::coefficient(const Exponent& e) const {
  auto it = terms_.find(e);
  return it == terms_.end() ? Rational(0) : it->second;
}

Rational Polynomial::constant_term() const { return coefficient(Exponent(dimension_, 0)); }

void Polynomial::add_term(const Exponent& e, const Rational& c) {
  if (e.size() != dimension_) throw DimensionMismatch("exponent length does not match dimension");
  if (c == 0) return;
  // mpq_class(n, d) does not reduce; GMP arithmetic and equality need canonical operands.
  Rational v(c);
  v.canonicalize();
  auto [it, inserted] = terms_.try_emplace(e, v);
  if (!inserted) {
    it->second += v;
    if (it->second == 0) terms_.erase(it);
  }
}

void Polynomial::require_same_dimension(const Polynomial& q, const char* op) const {
  if (q.dimension_ != dimension_)
    throw DimensionMismatch(std::string(op) + ": dimensions " + std::to_string(dimension_) +
                            " and " + std::to_string(q.dimension_) + " differ");
}

Polynomial& Polynomial::operator+=(const Polynomial& q) {
  require_same_dimension(q, "add");
  for (const auto& [e, c] : q.terms_) add_term(e, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& q) {
  require_same_dimension(q, "subtract");
  for (const auto& [e, c] : q.terms_) add_term(e, -c);
  return *this;
}

Polynomial operator*(const Polynomial& p, const Polynomial& q) {
  p.require_same_dimension(q, "multiply");
  Polynomial r(p.dimension_);
  Exponent e(p.dimension_);
  for (const auto& [ea, ca] : p.terms_) {
    for (const auto& [eb, cb] : q.terms_) {
      for (std::size_t k = 0; k < e.size(); ++k) e[k] = ea[k] + eb[k];
      r.add_term(e, ca * cb);
    }
  }
  return r;
}

Polynomial& Polynomial::operator*=(const Polynomial& q) { return *this = *this * q; }

Polynomial& Polynomial::operator*=(const Rational& c) {
  if (c == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& [e, coeff] : terms_) coeff *= c;
  return *this;
}

Polynomial operator-(Polynomial p) {
  for (auto& [e, c] : p.terms_) c = -c;
  return p;
}

bool operator==(const Polynomial& p, const Polynomial& q) {
  return p.dimension_ == q.dimension_ && p.terms_ == q.terms_;
}

Polynomial Polynomial::derivative(std::size_t index) const {
  if (index >= dimension_)
    throw IndexOutOfRange("derivative index " + std::to_string(index + 1) + " outside 1.." +
                          std::to_string(dimension_));
  Polynomial r(dimension_);
  for (const auto& [e, c] : terms_) {
    if (e[index] == 0) continue;
    Exponent d = e;
    d[index] -= 1;
    r.add_term(d, c * e[index]);
  }
  return r;
}

Rational Polynomial::evaluate(std::span<const Rational> x) const {
  if (x.size() != dimension_) throw DimensionMismatch("evaluation point has wrong dimension");
  Rational sum = 0;
  for (const auto& [e, c] : terms_) {
    Rational t = c;
    for (std::size_t k = 0; k < dimension_; ++k) {
      for (std::uint32_t a = 0; a < e[k]; ++a) t *= x[k];
    }
    sum += t;
  }
  return sum;
}

double Polynomial::evaluate(std::span<const double> x) const {
  if (x.size() != dimension_) throw DimensionMismatch("evaluation point has wrong dimension");
  double sum = 0.0;
  for (const auto& [e, c] : terms_) {
    double t = c.get_d();
    for (std::size_t k = 0; k < dimension_; ++k) {
      if (e[k]) t *= std::pow(x[k], static_cast<int>(e[k]));
    }
    sum += t;
  }
  return sum;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [e, c] : terms_) {
    if (!first) out += " + ";
    first = false;
    out += c.get_str();
    for (std::size_t k = 0; k < dimension_; ++k) {
      if (e[k] == 0) continue;
      out += " * x" + std::to_string(k + 1) + "^" + std::to_string(e[k]);
    }
  }
  return out;
}

Polynomial poly_combine(CombineOp op, const Polynomial& p, const Polynomial& q) {
  switch (op) {
    case CombineOp::add:
      return p + q;
    case CombineOp::mul:
      return p * q;
    case CombineOp::scale:
      if (!q.is_constant()) throw RejectedInput("scale requires a constant operand");
      return p * q.constant_term();
  }
  return p;
}

Polynomial poly_combine(CombineOp op, const Polynomial& p, const Rational& c) {
  return poly_combine(op, p, Polynomial::constant(p.dimension(), c));
}

Polynomial poly_diff(const Polynomial& p, std::size_t index) { return p.derivative(index); }

bool poly_is_zero(const Polynomial& p) { return p.is_zero(); }

Rational parse_rational(std::string_view text) {
  std::string s(text);
  // trim
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  if (b == std::string::npos) throw ParseError("empty rational");
  s = s.substr(b, e - b + 1);
  bool negative = false;
  if (s[0] == '-' || s[0] == '+') {
    negative = s[0] == '-';
    s.erase(0, 1);
  }
  Rational r;
  const auto slash = s.find('/');
  const auto dot = s.find('.');
  auto all_digits = [](std::string_view v) {
    return !v.empty() && std::all_of(v.begin(), v.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  };
  if (slash != std::string::npos) {
    const auto num = s.substr(0, slash);
    const auto den = s.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den)) throw ParseError("malformed rational '" + std::string(text) + "'");
    const mpz_class d(den, 10);
    if (d == 0) throw ParseError("zero denominator in '" + std::string(text) + "'");
    r = Rational(mpz_class(num, 10), d);
    r.canonicalize();
  } else if (dot != std::string::npos) {
    const auto whole = s.substr(0, dot);
    const auto frac = s.substr(dot + 1);
    if ((!whole.empty() && !all_digits(whole)) || (!frac.empty() && !all_digits(frac)) ||
        (whole.empty() && frac.empty()))
      throw ParseError("malformed decimal '" + std::string(text) + "'");
    mpz_class scale = 1;
    for (std::size_t k = 0; k < frac.size(); ++k) scale *= 10;
    const mpz_class digits((whole.empty() ? std::string("0") : whole) + frac, 10);
    r = Rational(digits, scale);
    r.canonicalize();
  } else {
    if (!all_digits(s)) throw ParseError("malformed rational '" + std::string(text) + "'");
    r = Rational(mpz_class(s, 10));
  }
  return negative ? Rational(-r) : r;
}

namespace {

class PolyParser {
 public:
  PolyParser(std::string_view text, std::size_t n) : text_(text), n_(n) {}

  Polynomial parse() {
    Polynomial p = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("polynomial parse error at column " + std::to_string(pos_ + 1) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Polynomial expr() {
    Polynomial p = term();
    for (;;) {
      if (accept('+')) {
        p += term();
      } else if (accept('-')) {
        p -= term();
      } else {
        return p;
      }
    }
  }

  Polynomial term() {
    Polynomial p = unary();
    for (;;) {
      if (accept('*')) {
        p *= unary();
      } else if (accept('/')) {
        const Polynomial d = unary();
        if (!d.is_constant() || d.is_zero()) fail("division only by a non-zero constant");
        p *= Rational(1) / d.constant_term();
      } else {
        return p;
      }
    }
  }

  Polynomial unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  Polynomial power() {
    Polynomial base = atom();
    if (accept('^')) {
      skip_ws();
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) fail("expected non-negative integer exponent");
      const unsigned long k = std::stoul(std::string(text_.substr(start, pos_ - start)));
      if (k > 64) fail("exponent too large");
      Polynomial r = Polynomial::constant(n_, 1);
      for (unsigned long i = 0; i < k; ++i) r *= base;
      return r;
    }
    return base;
  }

  Polynomial atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomial p = expr();
      if (!accept(')')) fail("expected ')'");
      return p;
    }
    if (c == 'x') {
      ++pos_;
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) fail("expected variable index after 'x'");
      const unsigned long idx = std::stoul(std::string(text_.substr(start, pos_ - start)));
      if (idx < 1 || idx > n_) fail("variable x" + std::to_string(idx) + " outside x1..x" + std::to_string(n_));
      return Polynomial::variable(n_, idx - 1);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
        ++pos_;
      return Polynomial::constant(n_, parse_rational(text_.substr(start, pos_ - start)));
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string_view text_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

}  // namespace

Polynomial parse_polynomial(std::string_view text, std::size_t dimension) {
  return PolyParser(text, dimension).parse();
}

CompiledPolynomial::CompiledPolynomial(const Polynomial& p) : dimension_(p.dimension()) {
  offsets_.push_back(0);
  for (const auto& [e, c] : p.terms()) {
    coeffs_.push_back(c.get_d());
    for (std::uint32_t k = 0; k < e.size(); ++k) {
      if (e[k] == 0) continue;
      factors_.emplace_back(k, e[k]);
      max_exponent_ = std::max(max_exponent_, e[k]);
    }
    offsets_.push_back(static_cast<std::uint32_t>(factors_.size()));
  }
}

double CompiledPolynomial::operator()(std::span<const double> x) const {
  if (coeffs_.empty()) return 0.0;
  const std::size_t stride = max_exponent_ + 1;
  const std::size_t table_size = dimension_ * stride;
  std::array<double, 256> local{};
  std::vector<double> heap;
  double* pw = local.data();
  if (table_size > local.size()) {
    heap.resize(table_size);
    pw = heap.data();
  }
  for (std::size_t k = 0; k < dimension_; ++k) {
    double* row = pw + k * stride;
    row[0] = 1.0;
    for (std::size_t a = 1; a < stride; ++a) row[a] = row[a - 1] * x[k];
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < coeffs_.size(); ++t) {
    double v = coeffs_[t];
    for (std::uint32_t f = offsets_[t]; f < offsets_[t + 1]; ++f) {
      v *= pw[factors_[f].first * stride + factors_[f].second];
    }
    sum += v;
  }
  return sum;
}

}  // namespace subhess
