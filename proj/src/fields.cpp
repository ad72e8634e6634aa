#include "subhess/fields.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <Eigen/Dense>

namespace subhess {

VectorField::VectorField(std::vector<Polynomial> coefficients) : coefficients_(std::move(coefficients)) {
  if (coefficients_.empty()) throw DimensionMismatch("vector field needs at least one coefficient");
  const std::size_t n = coefficients_.size();
  for (const auto& b : coefficients_) {
    if (b.dimension() != n)
      throw DimensionMismatch("coefficient polynomial dimension " + std::to_string(b.dimension()) +
                              " does not match field dimension " + std::to_string(n));
  }
}

VectorField VectorField::zero(std::size_t dimension) {
  return VectorField(std::vector<Polynomial>(dimension, Polynomial(dimension)));
}

VectorField VectorField::coordinate(std::size_t dimension, std::size_t index) {
  std::vector<Polynomial> b(dimension, Polynomial(dimension));
  b.at(index) = Polynomial::constant(dimension, 1);
  return VectorField(std::move(b));
}

bool VectorField::is_zero() const {
  return std::all_of(coefficients_.begin(), coefficients_.end(), [](const Polynomial& p) { return p.is_zero(); });
}

Polynomial VectorField::apply(const Polynomial& f) const {
  if (f.dimension() != dimension())
    throw DimensionMismatch("field of dimension " + std::to_string(dimension()) +
                            " applied to polynomial of dimension " + std::to_string(f.dimension()));
  Polynomial r(dimension());
  for (std::size_t j = 0; j < dimension(); ++j) {
    if (coefficients_[j].is_zero()) continue;
    const Polynomial d = f.derivative(j);
    if (!d.is_zero()) r += coefficients_[j] * d;
  }
  return r;
}

Polynomial VectorField::divergence() const {
  Polynomial r(dimension());
  for (std::size_t j = 0; j < dimension(); ++j) r += coefficients_[j].derivative(j);
  return r;
}

std::vector<double> VectorField::evaluate(std::span<const double> x) const {
  std::vector<double> v(dimension());
  for (std::size_t j = 0; j < dimension(); ++j) v[j] = coefficients_[j].evaluate(x);
  return v;
}

VectorField VectorField::operator+(const VectorField& other) const {
  if (other.dimension() != dimension()) throw DimensionMismatch("adding fields of different dimension");
  std::vector<Polynomial> b = coefficients_;
  for (std::size_t j = 0; j < b.size(); ++j) b[j] += other.coefficients_[j];
  return VectorField(std::move(b));
}

VectorField VectorField::operator-() const {
  std::vector<Polynomial> b;
  b.reserve(coefficients_.size());
  for (const auto& c : coefficients_) b.push_back(-c);
  return VectorField(std::move(b));
}

VectorField VectorField::operator*(const Rational& c) const {
  std::vector<Polynomial> b = coefficients_;
  for (auto& p : b) p *= c;
  return VectorField(std::move(b));
}

std::string VectorField::to_string() const {
  std::string out;
  for (std::size_t j = 0; j < coefficients_.size(); ++j) {
    if (j) out += " ; ";
    out += coefficients_[j].to_string();
  }
  return out;
}

Polynomial apply_field(const VectorField& x, const Polynomial& f) { return x.apply(f); }

VectorField commutator(const VectorField& x, const VectorField& y) {
  if (x.dimension() != y.dimension()) throw DimensionMismatch("commutator of fields of different dimension");
  std::vector<Polynomial> b;
  b.reserve(x.dimension());
  for (std::size_t j = 0; j < x.dimension(); ++j) {
    b.push_back(x.apply(y.coefficient(j)) - y.apply(x.coefficient(j)));
  }
  return VectorField(std::move(b));
}

FieldSystem::FieldSystem(std::string name, std::vector<VectorField> fields, std::optional<int> homogeneous_dimension)
    : name_(std::move(name)), fields_(std::move(fields)), homogeneous_dimension_(homogeneous_dimension) {
  if (fields_.empty()) throw DimensionMismatch("field system needs at least one field");
  n_ = fields_.front().dimension();
  for (const auto& f : fields_) {
    if (f.dimension() != n_) throw DimensionMismatch("fields of system '" + name_ + "' differ in dimension");
  }
}

bool FieldSystem::is_commuting() const {
  for (std::size_t i = 0; i < m(); ++i)
    for (std::size_t j = i + 1; j < m(); ++j)
      if (!commutator(fields_[i], fields_[j]).is_zero()) return false;
  return true;
}

FieldSystem euclidean(std::size_t n) {
  if (n == 0) throw RejectedInput("euclidean(n) needs n >= 1");
  std::vector<VectorField> f;
  for (std::size_t i = 0; i < n; ++i) f.push_back(VectorField::coordinate(n, i));
  return FieldSystem("euclidean" + std::to_string(n), std::move(f), static_cast<int>(n));
}

FieldSystem heisenberg(std::size_t n) {
  if (n == 0) throw RejectedInput("heisenberg(n) needs n >= 1");
  const std::size_t dim = 2 * n + 1;
  const Rational half(1, 2);
  std::vector<VectorField> f;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Polynomial> b(dim, Polynomial(dim));
    b[i] = Polynomial::constant(dim, 1);
    b[dim - 1] = Polynomial::variable(dim, n + i) * Rational(-half);
    f.emplace_back(std::move(b));
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<Polynomial> b(dim, Polynomial(dim));
    b[n + i] = Polynomial::constant(dim, 1);
    b[dim - 1] = Polynomial::variable(dim, i) * half;
    f.emplace_back(std::move(b));
  }
  return FieldSystem("heisenberg" + std::to_string(n), std::move(f), static_cast<int>(2 * n + 2));
}

FieldSystem engel() {
  const std::size_t dim = 4;
  const Polynomial x1 = Polynomial::variable(dim, 0);
  std::vector<Polynomial> b2(dim, Polynomial(dim));
  b2[1] = Polynomial::constant(dim, 1);
  b2[2] = x1;
  b2[3] = x1 * x1 * Rational(1, 2);
  std::vector<VectorField> f{VectorField::coordinate(dim, 0), VectorField(std::move(b2))};
  // Graded layers of dimension 2, 1, 1 with weights 1, 2, 3.
  return FieldSystem("engel", std::move(f), 7);
}

namespace {

std::optional<std::pair<std::string, std::size_t>> split_builtin(std::string_view name) {
  std::string s(name);
  s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
  std::string base;
  std::string digits;
  std::size_t k = 0;
  while (k < s.size() && std::isalpha(static_cast<unsigned char>(s[k]))) base += s[k++];
  if (k < s.size() && s[k] == '(') {
    ++k;
    while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) digits += s[k++];
    if (k >= s.size() || s[k] != ')') return std::nullopt;
    ++k;
  } else {
    while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) digits += s[k++];
  }
  if (k != s.size()) return std::nullopt;
  std::size_t n = 0;
  if (!digits.empty()) {
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (ec != std::errc()) return std::nullopt;
  }
  return std::make_pair(base, n);
}

}  // namespace

bool is_builtin_name(std::string_view name) {
  const auto parts = split_builtin(name);
  if (!parts) return false;
  const auto& [base, n] = *parts;
  if (base == "engel") return n == 0;
  return (base == "euclidean" || base == "heisenberg") && n >= 1;
}

FieldSystem builtin(std::string_view name) {
  if (!is_builtin_name(name)) throw RejectedInput("unknown built-in field system '" + std::string(name) + "'");
  const auto [base, n] = *split_builtin(name);
  if (base == "engel") return engel();
  if (base == "euclidean") return euclidean(n);
  return heisenberg(n);
}

std::vector<VectorField> y_fields(const FieldSystem& s) {
  std::vector<VectorField> ys;
  for (std::size_t j = 0; j < s.m(); ++j) {
    VectorField y = VectorField::zero(s.n());
    for (std::size_t i = 0; i < s.m(); ++i) {
      if (i == j) continue;
      y = y + commutator(s[i], commutator(s[i], s[j]));
    }
    ys.push_back(std::move(y));
  }
  return ys;
}

VectorField z_field(const FieldSystem& s) {
  const auto ys = y_fields(s);
  VectorField z = VectorField::zero(s.n());
  for (std::size_t j = 0; j < s.m(); ++j) z = z + commutator(s[j], ys[j]);
  return z;
}

bool ConditionReport::all_anti_self_adjoint() const {
  return std::all_of(anti_self_adjoint.begin(), anti_self_adjoint.end(), [](bool b) { return b; });
}

bool ConditionReport::all_weakened_span() const {
  return std::all_of(weakened_span.begin(), weakened_span.end(), [](bool b) { return b; });
}

namespace {

Eigen::MatrixXd columns_at(const std::vector<VectorField>& fields, std::span<const double> x) {
  const std::size_t n = x.size();
  Eigen::MatrixXd a(n, fields.size());
  for (std::size_t c = 0; c < fields.size(); ++c) {
    const auto v = fields[c].evaluate(x);
    for (std::size_t r = 0; r < n; ++r) a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[r];
  }
  return a;
}

std::size_t numeric_rank(const Eigen::MatrixXd& a) {
  if (a.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  const auto& sv = svd.singularValues();
  const double scale = std::max(1.0, sv.size() ? sv(0) : 0.0);
  std::size_t rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > kRankTolerance * scale) ++rank;
  return rank;
}

void hormander_check(const FieldSystem& s, const std::vector<std::vector<double>>& samples, int max_step,
                     HormanderResult& out) {
  out.sample_points = samples;
  std::vector<VectorField> all;
  std::vector<VectorField> level;
  for (const auto& f : s.fields()) {
    if (!f.is_zero()) level.push_back(f);
  }
  for (int step = 1; step <= max_step; ++step) {
    if (step > 1) {
      std::vector<VectorField> next;
      for (const auto& x : s.fields()) {
        for (const auto& b : level) {
          VectorField c = commutator(x, b);
          if (c.is_zero()) continue;
          if (std::find(next.begin(), next.end(), c) != next.end()) continue;
          if (std::find(next.begin(), next.end(), -c) != next.end()) continue;
          next.push_back(std::move(c));
        }
      }
      level = std::move(next);
    }
    all.insert(all.end(), level.begin(), level.end());
    std::size_t worst = s.n();
    for (const auto& x : samples) worst = std::min(worst, numeric_rank(columns_at(all, x)));
    out.min_rank = worst;
    if (worst == s.n()) {
      out.holds = true;
      out.step = step;
      return;
    }
    if (level.empty()) break;
  }
  out.holds = false;
  out.step = 0;
}

}  // namespace

ConditionReport check_conditions(const FieldSystem& s, const std::vector<std::vector<double>>& sample_points,
                                 int max_step) {
  ConditionReport r;
  const std::size_t m = s.m();
  for (const auto& f : s.fields()) r.anti_self_adjoint.push_back(f.divergence().is_zero());

  // brackets[i][j] = [X_i, X_j]
  std::vector<std::vector<VectorField>> brackets(m, std::vector<VectorField>(m, VectorField::zero(s.n())));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (i != j) brackets[i][j] = commutator(s[i], s[j]);

  r.step2_vanishing = true;
  r.all_second_commutators_vanish = true;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      for (std::size_t k = 0; k < m; ++k) {
        const bool zero = commutator(s[k], brackets[i][j]).is_zero();
        if (zero) continue;
        r.all_second_commutators_vanish = false;
        r.nonvanishing_all.push_back({k, i, j});
        if (k == i || k == j) {
          r.step2_vanishing = false;
          r.nonvanishing.push_back({k, i, j});
        }
      }
    }
  }

  const auto ys = y_fields(s);
  r.z_vanishes = z_field(s).is_zero();

  for (const auto& x : sample_points) {
    if (x.size() != s.n()) throw DimensionMismatch("sample point dimension does not match system");
  }
  if (sample_points.empty()) {
    r.numeric_error = "empty sample list: Hormander and span checks not run";
    r.weakened_span.assign(m, false);
    r.weakened_span_residual.assign(m, std::numeric_limits<double>::quiet_NaN());
    return r;
  }
  if (max_step < 1) throw RejectedInput("max_step must be at least 1");
  hormander_check(s, sample_points, max_step, r.hormander);

  std::vector<VectorField> span_fields = s.fields();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) span_fields.push_back(brackets[i][j]);

  for (std::size_t j = 0; j < m; ++j) {
    double worst = 0.0;
    if (!ys[j].is_zero()) {
      for (const auto& x : sample_points) {
        const Eigen::MatrixXd a = columns_at(span_fields, x);
        const auto yv = ys[j].evaluate(x);
        const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(yv.data(), static_cast<Eigen::Index>(yv.size()));
        const Eigen::VectorXd c = a.completeOrthogonalDecomposition().solve(y);
        const double res = (a * c - y).norm() / std::max(1.0, y.norm());
        worst = std::max(worst, res);
      }
    }
    r.weakened_span_residual.push_back(worst);
    r.weakened_span.push_back(worst <= kSpanTolerance);
  }
  return r;
}

FieldSystem read_field_system(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos || line[b] == '#') continue;
      return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError("missing header `n m name`", line_no);
  std::istringstream header(line);
  long n = 0, m = 0;
  std::string name;
  if (!(header >> n >> m) || n < 1 || m < 1) throw ParseError("header must be `n m name` with n, m >= 1", line_no);
  std::getline(header >> std::ws, name);
  while (!name.empty() && (name.back() == '\r' || name.back() == ' ')) name.pop_back();
  if (name.empty()) name = "custom";

  std::vector<VectorField> fields;
  for (long i = 0; i < m; ++i) {
    if (!next_line()) throw ParseError("expected " + std::to_string(m) + " field lines", line_no);
    std::vector<Polynomial> coeffs;
    std::stringstream ss(line);
    std::string part;
    while (std::getline(ss, part, ';')) {
      try {
        coeffs.push_back(parse_polynomial(part, static_cast<std::size_t>(n)));
      } catch (const ParseError& e) {
        throw ParseError(e.what(), line_no);
      }
    }
    if (coeffs.size() != static_cast<std::size_t>(n))
      throw ParseError("field line has " + std::to_string(coeffs.size()) + " coefficients, expected " +
                           std::to_string(n),
                       line_no);
    fields.emplace_back(std::move(coeffs));
  }
  return FieldSystem(name, std::move(fields));
}

FieldSystem load_field_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RejectedInput("cannot open field system file '" + path + "'");
  return read_field_system(in);
}

void write_field_system(std::ostream& out, const FieldSystem& s) {
  out << s.n() << ' ' << s.m() << ' ' << s.name() << '\n';
  for (const auto& f : s.fields()) out << f.to_string() << '\n';
}

}  // namespace subhess
