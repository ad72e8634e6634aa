#pragma once

// Subelliptic Hessians X^2 u, elementary symmetric operators S_j computed
// from principal minors, the modified 2-Hessian family and the sub-Laplacians.

#include <optional>
#include <span>
#include <type_traits>
#include <variant>
#include <vector>

#include "subhess/fields.hpp"

namespace subhess {

template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, const T& fill) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool is_square() const { return rows_ == cols_; }
  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<T> data_;
};

namespace detail {

inline double zero_like(const double&) { return 0.0; }
inline Rational zero_like(const Rational&) { return Rational(0); }
inline Polynomial zero_like(const Polynomial& p) { return Polynomial(p.dimension()); }
inline double one_like(const double&) { return 1.0; }
inline Rational one_like(const Rational&) { return Rational(1); }
inline Polynomial one_like(const Polynomial& p) { return Polynomial::constant(p.dimension(), 1); }

template <class T>
bool is_zero_entry(const T& v) {
  if constexpr (std::is_same_v<T, Polynomial>) {
    return v.is_zero();
  } else {
    return v == 0;
  }
}

// Cofactor expansion along the first row of the submatrix on rows x cols.
template <class T>
T minor_det(const Matrix<T>& a, std::span<const std::size_t> rows, const std::vector<std::size_t>& cols) {
  const T& ref = a(0, 0);
  if (rows.empty()) return one_like(ref);
  if (rows.size() == 1) return a(rows[0], cols[0]);
  if (rows.size() == 2) return a(rows[0], cols[0]) * a(rows[1], cols[1]) - a(rows[0], cols[1]) * a(rows[1], cols[0]);
  T det = zero_like(ref);
  std::vector<std::size_t> rest;
  rest.reserve(cols.size() - 1);
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const T& e = a(rows[0], cols[k]);
    if (is_zero_entry(e)) continue;
    rest.clear();
    for (std::size_t l = 0; l < cols.size(); ++l)
      if (l != k) rest.push_back(cols[l]);
    T term = e * minor_det(a, rows.subspan(1), rest);
    if (k % 2) {
      det -= term;
    } else {
      det += term;
    }
  }
  return det;
}

template <class T>
T principal_minor(const Matrix<T>& a, const std::vector<std::size_t>& idx) {
  return minor_det(a, std::span<const std::size_t>(idx), idx);
}

}  // namespace detail

// Determinant by cofactor expansion; exact for Rational and Polynomial.
template <class T>
T determinant(const Matrix<T>& a) {
  if (!a.is_square()) throw DimensionMismatch("determinant of a non-square matrix");
  if (a.rows() == 0) throw DimensionMismatch("determinant of an empty matrix");
  std::vector<std::size_t> idx(a.rows());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return detail::principal_minor(a, idx);
}

// S_j(M): sum of the j x j principal minors of M with the rows/columns in
// `deleted` removed first. For symmetric M this is S_j of the eigenvalues.
// S_0 = 1.
template <class T>
T sigma_j(const Matrix<T>& a, std::size_t j, const std::vector<std::size_t>& deleted = {}) {
  if (!a.is_square() || a.rows() == 0) throw DimensionMismatch("sigma_j needs a non-empty square matrix");
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    bool drop = false;
    for (std::size_t d : deleted) {
      if (d >= a.rows()) throw IndexOutOfRange("deleted index " + std::to_string(d + 1) + " outside 1.." + std::to_string(a.rows()));
      drop = drop || d == i;
    }
    if (!drop) keep.push_back(i);
  }
  if (j > a.rows()) throw IndexOutOfRange("sigma_j order " + std::to_string(j) + " exceeds matrix size " + std::to_string(a.rows()));
  const T& ref = a(0, 0);
  if (j == 0) return detail::one_like(ref);
  T total = detail::zero_like(ref);
  if (j > keep.size()) return total;
  // Enumerate j-subsets of keep in lexicographic order.
  std::vector<std::size_t> pick(j);
  for (std::size_t i = 0; i < j; ++i) pick[i] = i;
  std::vector<std::size_t> idx(j);
  while (true) {
    for (std::size_t i = 0; i < j; ++i) idx[i] = keep[pick[i]];
    total = total + detail::principal_minor(a, idx);
    std::size_t t = j;
    while (t > 0 && pick[t - 1] == keep.size() - j + t - 1) --t;
    if (t == 0) break;
    ++pick[t - 1];
    for (std::size_t i = t; i < j; ++i) pick[i] = pick[i - 1] + 1;
  }
  return total;
}

// Entrywise (tr M) delta_ij + M_ij - 2 M_ji.
template <class T>
Matrix<T> f2_linearized(const Matrix<T>& a) {
  if (!a.is_square() || a.rows() == 0) throw DimensionMismatch("f2_linearized needs a non-empty square matrix");
  const std::size_t m = a.rows();
  T tr = detail::zero_like(a(0, 0));
  for (std::size_t i = 0; i < m; ++i) tr = tr + a(i, i);
  Matrix<T> out(m, m, detail::zero_like(a(0, 0)));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      T v = a(i, j) - a(j, i) - a(j, i);
      if (i == j) v = v + tr;
      out(i, j) = v;
    }
  return out;
}

// (tr M) delta_ij - M_ji: linearization of the classical F_2.
template <class T>
Matrix<T> f2_classical_linearized(const Matrix<T>& a) {
  if (!a.is_square() || a.rows() == 0) throw DimensionMismatch("f2_classical_linearized needs a non-empty square matrix");
  const std::size_t m = a.rows();
  T tr = detail::zero_like(a(0, 0));
  for (std::size_t i = 0; i < m; ++i) tr = tr + a(i, i);
  Matrix<T> out(m, m, detail::zero_like(a(0, 0)));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) out(i, j) = (i == j ? tr : detail::zero_like(tr)) - a(j, i);
  return out;
}

// Index of the pair i < j in row-major upper-triangle order.
inline std::size_t pair_index(std::size_t i, std::size_t j, std::size_t m) {
  return i * m - i * (i + 1) / 2 + (j - i - 1);
}

struct HessianPair {
  Matrix<Polynomial> full;  // r_ij = X_i X_j u
  Matrix<Polynomial> sym;   // s_ij = (r_ij + r_ji) / 2
  std::vector<Polynomial> comm;  // [X_i, X_j] u for i < j, see pair_index

  std::size_t m() const { return full.rows(); }
  const Polynomial& commutator(std::size_t i, std::size_t j) const { return comm.at(pair_index(i, j, m())); }
};

HessianPair full_hessian(const FieldSystem& s, const Polynomial& u);

// F_2(X_s^2 u) + alpha * sum_{i<j} ([X_i,X_j]u)^2. alpha = 3/4 is the
// divergence-form operator, alpha = 0 the classical F_2.
Polynomial f2_family(const FieldSystem& s, const Polynomial& u, const Rational& alpha);
Polynomial f2_family(const HessianPair& h, const Rational& alpha);
// sum_{i<j} ([X_i,X_j]u)^2
Polynomial e2(const HessianPair& h);
Polynomial e2(const FieldSystem& s, const Polynomial& u);
// f2_family(u, 3/4) + 1/2 sum_j (X_j u)(Y_j u)
Polynomial f2_star(const FieldSystem& s, const Polynomial& u);
// F_j(X_s^2 u) as a polynomial.
Polynomial f_j(const FieldSystem& s, const Polynomial& u, std::size_t j);
// sum_i X_i X_i u
Polynomial delta_x(const FieldSystem& s, const Polynomial& u);
std::vector<Polynomial> horizontal_gradient(const FieldSystem& s, const Polynomial& u);

// Xu and X_s^2 u at a point.
struct PointJet {
  std::vector<double> grad;
  Matrix<double> sym;
  double grad_norm2() const;
  double trace() const;
};

// u lowered once for repeated pointwise evaluation of its jet.
class JetEvaluator {
 public:
  JetEvaluator(const FieldSystem& s, const Polynomial& u);
  std::size_t m() const { return grad_.size(); }
  std::size_t n() const { return n_; }
  PointJet operator()(std::span<const double> x) const;

 private:
  std::size_t n_;
  std::vector<CompiledPolynomial> grad_;
  std::vector<CompiledPolynomial> sym_;  // upper triangle, row-major
};

// |Xu|^{p-2} { Delta_X u + (p-2) X_iu X_ju s_ij / |Xu|^2 }. At |Xu| = 0 the
// value is 0 for p > 2 and Delta_X u for p = 2; p < 2 throws SingularPoint.
double delta_p(const PointJet& jet, double p);
// X_iu X_ju s_ij
double delta_inf(const PointJet& jet);

enum class LaplacianKind { delta_x, delta_p, delta_inf };
double laplacian(const FieldSystem& s, const Polynomial& u, LaplacianKind kind, std::span<const double> x, double p = 2.0);

enum class OperatorKind { f_j, script_f2_alpha, script_e2, script_f2_star, delta_x, delta_p, delta_inf };

struct OperatorSpec {
  OperatorKind kind = OperatorKind::f_j;
  std::size_t j = 2;        // f_j
  Rational alpha = 0;       // script_f2_alpha
  double p = 2.0;           // delta_p
};

struct OperatorValue {
  OperatorSpec spec;
  // Polynomial for symbolic kinds; double for pointwise kinds.
  std::variant<Polynomial, double> value;
};

// Symbolic kinds return a Polynomial (point ignored); delta_p and delta_inf
// require a point.
OperatorValue evaluate_operator(const FieldSystem& s, const Polynomial& u, const OperatorSpec& spec,
                                std::optional<std::vector<double>> point = std::nullopt);

// Smallest eigenvalue of (tr s) I - s; >= 0 iff the F_2 linearization is
// positive semidefinite at s.
double f2_ellipticity_margin(const Matrix<double>& sym);

struct KConvexReport {
  bool holds = false;
  // Most negative S_j(X_s^2 u(x)) over j <= k and all samples.
  std::vector<double> worst_point;
  std::size_t worst_j = 0;
  double worst_value = 0.0;
};

KConvexReport is_k_convex(const FieldSystem& s, const Polynomial& u, std::size_t k,
                          const std::vector<std::vector<double>>& samples, double tol);
KConvexReport is_k_convex(const JetEvaluator& jets, std::size_t k, const std::vector<std::vector<double>>& samples,
                          double tol);

}  // namespace subhess
