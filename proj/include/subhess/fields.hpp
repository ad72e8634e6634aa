#pragma once

// First-order operators X = sum_j b^j D_j with polynomial coefficients,
// their commutator algebra, and the structural hypotheses on a system
// X_1..X_m: divergence-free rows, bracket-generating (Hormander) and the
// vanishing of second commutators.

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subhess/sympoly.hpp"

namespace subhess {

class VectorField {
 public:
  explicit VectorField(std::vector<Polynomial> coefficients);
  static VectorField zero(std::size_t dimension);
  // D_{index+1}
  static VectorField coordinate(std::size_t dimension, std::size_t index);

  std::size_t dimension() const { return coefficients_.size(); }
  const std::vector<Polynomial>& coefficients() const { return coefficients_; }
  const Polynomial& coefficient(std::size_t j) const { return coefficients_.at(j); }
  bool is_zero() const;

  // sum_j b^j d_j f, exact.
  Polynomial apply(const Polynomial& f) const;
  // sum_j d_j b^j; zero iff X* = -X.
  Polynomial divergence() const;
  std::vector<double> evaluate(std::span<const double> x) const;

  VectorField operator+(const VectorField& other) const;
  VectorField operator-() const;
  VectorField operator*(const Rational& c) const;
  friend bool operator==(const VectorField& a, const VectorField& b) = default;

  std::string to_string() const;

 private:
  std::vector<Polynomial> coefficients_;
};

Polynomial apply_field(const VectorField& x, const Polynomial& f);

// [X, Y] = XY - YX as the first-order field sum_j (X b_Y^j - Y b_X^j) D_j.
VectorField commutator(const VectorField& x, const VectorField& y);

class FieldSystem {
 public:
  FieldSystem(std::string name, std::vector<VectorField> fields,
              std::optional<int> homogeneous_dimension = std::nullopt);

  const std::string& name() const { return name_; }
  std::size_t m() const { return fields_.size(); }
  std::size_t n() const { return n_; }
  const std::vector<VectorField>& fields() const { return fields_; }
  const VectorField& operator[](std::size_t i) const { return fields_.at(i); }
  // Known homogeneous dimension for the built-in groups; custom systems
  // leave this empty.
  std::optional<int> homogeneous_dimension() const { return homogeneous_dimension_; }

  // [X_i, X_j] is zero for every pair.
  bool is_commuting() const;

 private:
  std::string name_;
  std::vector<VectorField> fields_;
  std::size_t n_;
  std::optional<int> homogeneous_dimension_;
};

FieldSystem euclidean(std::size_t n);
// H^n: X_i = D_i - x_{n+i}/2 D_{2n+1}, X_{n+i} = D_{n+i} + x_i/2 D_{2n+1}.
FieldSystem heisenberg(std::size_t n);
// X_1 = D_1, X_2 = D_2 + x_1 D_3 + x_1^2/2 D_4 on R^4.
FieldSystem engel();
// Accepts "euclidean<n>", "euclidean(<n>)", "heisenberg<n>", "heisenberg(<n>)",
// "engel", "engel()".
FieldSystem builtin(std::string_view name);
bool is_builtin_name(std::string_view name);

// Y_j = sum_i [X_i, [X_i, X_j]].
std::vector<VectorField> y_fields(const FieldSystem& s);
// Z = sum_j [X_j, Y_j].
VectorField z_field(const FieldSystem& s);

struct BracketTriple {
  std::size_t k, i, j;  // 0-based: [X_k, [X_i, X_j]]
  friend bool operator==(const BracketTriple&, const BracketTriple&) = default;
};

struct HormanderResult {
  bool holds = false;
  // Smallest bracket length that spans R^n at every sample; 0 if none did
  // within max_step.
  int step = 0;
  std::vector<std::vector<double>> sample_points;
  // Rank achieved at the worst sample for the final step tried.
  std::size_t min_rank = 0;
};

struct ConditionReport {
  std::vector<bool> anti_self_adjoint;
  HormanderResult hormander;
  // [X_i,[X_i,X_j]] and [X_j,[X_i,X_j]] vanish for all pairs.
  bool step2_vanishing = false;
  std::vector<BracketTriple> nonvanishing;
  // Stronger reading: every [X_k,[X_i,X_j]] vanishes.
  bool all_second_commutators_vanish = false;
  std::vector<BracketTriple> nonvanishing_all;
  std::vector<bool> weakened_span;
  std::vector<double> weakened_span_residual;
  bool z_vanishes = false;
  // Set when the numeric parts (rank and span tests) could not run, e.g. for
  // an empty sample list; the symbolic parts are still filled in.
  std::optional<std::string> numeric_error;

  bool all_anti_self_adjoint() const;
  bool all_weakened_span() const;
};

inline constexpr double kRankTolerance = 1e-9;
inline constexpr double kSpanTolerance = 1e-9;

ConditionReport check_conditions(const FieldSystem& s,
                                 const std::vector<std::vector<double>>& sample_points,
                                 int max_step);

// Text format: header `n m name`, then m lines each holding the n coefficient
// polynomials of one field separated by ';'. '#' starts a comment line.
FieldSystem read_field_system(std::istream& in);
FieldSystem load_field_system(const std::string& path);
void write_field_system(std::ostream& out, const FieldSystem& s);

}  // namespace subhess
