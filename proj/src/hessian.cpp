#include "subhess/hessian.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace subhess {

namespace {

void require_dimension(const FieldSystem& s, const Polynomial& u) {
  if (u.dimension() != s.n())
    throw DimensionMismatch("polynomial of dimension " + std::to_string(u.dimension()) + " used with system '" +
                            s.name() + "' on R^" + std::to_string(s.n()));
}

}  // namespace

std::vector<Polynomial> horizontal_gradient(const FieldSystem& s, const Polynomial& u) {
  require_dimension(s, u);
  std::vector<Polynomial> g;
  g.reserve(s.m());
  for (const auto& x : s.fields()) g.push_back(x.apply(u));
  return g;
}

HessianPair full_hessian(const FieldSystem& s, const Polynomial& u) {
  const auto g = horizontal_gradient(s, u);
  const std::size_t m = s.m();
  const Polynomial zero(s.n());
  HessianPair h{Matrix<Polynomial>(m, m, zero), Matrix<Polynomial>(m, m, zero), {}};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) h.full(i, j) = s[i].apply(g[j]);
  const Rational half(1, 2);
  for (std::size_t i = 0; i < m; ++i) {
    h.sym(i, i) = h.full(i, i);
    for (std::size_t j = i + 1; j < m; ++j) {
      h.sym(i, j) = (h.full(i, j) + h.full(j, i)) * half;
      h.sym(j, i) = h.sym(i, j);
      h.comm.push_back(h.full(i, j) - h.full(j, i));
    }
  }
  return h;
}

Polynomial e2(const HessianPair& h) {
  Polynomial total(h.full(0, 0).dimension());
  for (const auto& c : h.comm) total += c * c;
  return total;
}

Polynomial e2(const FieldSystem& s, const Polynomial& u) { return e2(full_hessian(s, u)); }

Polynomial f2_family(const HessianPair& h, const Rational& alpha) {
  Polynomial f = h.m() >= 2 ? sigma_j(h.sym, 2) : Polynomial(h.full(0, 0).dimension());
  if (alpha != 0) f += e2(h) * alpha;
  return f;
}

Polynomial f2_family(const FieldSystem& s, const Polynomial& u, const Rational& alpha) {
  return f2_family(full_hessian(s, u), alpha);
}

Polynomial f2_star(const FieldSystem& s, const Polynomial& u) {
  const auto h = full_hessian(s, u);
  Polynomial f = f2_family(h, Rational(3, 4));
  const auto ys = y_fields(s);
  const Rational half(1, 2);
  for (std::size_t j = 0; j < s.m(); ++j) {
    if (ys[j].is_zero()) continue;
    f += s[j].apply(u) * ys[j].apply(u) * half;
  }
  return f;
}

Polynomial f_j(const FieldSystem& s, const Polynomial& u, std::size_t j) {
  if (j > s.m()) throw IndexOutOfRange("F_j order " + std::to_string(j) + " exceeds m = " + std::to_string(s.m()));
  return sigma_j(full_hessian(s, u).sym, j);
}

Polynomial delta_x(const FieldSystem& s, const Polynomial& u) {
  require_dimension(s, u);
  Polynomial total(s.n());
  for (const auto& x : s.fields()) total += x.apply(x.apply(u));
  return total;
}

double PointJet::grad_norm2() const {
  double t = 0.0;
  for (double g : grad) t += g * g;
  return t;
}

double PointJet::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < sym.rows(); ++i) t += sym(i, i);
  return t;
}

JetEvaluator::JetEvaluator(const FieldSystem& s, const Polynomial& u) : n_(s.n()) {
  const auto h = full_hessian(s, u);
  for (const auto& x : s.fields()) grad_.emplace_back(x.apply(u));
  for (std::size_t i = 0; i < s.m(); ++i)
    for (std::size_t j = i; j < s.m(); ++j) sym_.emplace_back(h.sym(i, j));
}

PointJet JetEvaluator::operator()(std::span<const double> x) const {
  if (x.size() != n_) throw DimensionMismatch("jet evaluation point has wrong dimension");
  const std::size_t m = grad_.size();
  PointJet jet{std::vector<double>(m), Matrix<double>(m, m, 0.0)};
  for (std::size_t i = 0; i < m; ++i) jet.grad[i] = grad_[i](x);
  std::size_t k = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) {
      const double v = sym_[k++](x);
      jet.sym(i, j) = v;
      jet.sym(j, i) = v;
    }
  return jet;
}

double delta_inf(const PointJet& jet) {
  double t = 0.0;
  const std::size_t m = jet.grad.size();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) t += jet.grad[i] * jet.grad[j] * jet.sym(i, j);
  return t;
}

double delta_p(const PointJet& jet, double p) {
  const double g2 = jet.grad_norm2();
  const double lap = jet.trace();
  if (g2 == 0.0) {
    if (p > 2.0) return 0.0;
    if (p == 2.0) return lap;
    throw SingularPoint("delta_p with p < 2 at a point where Xu = 0");
  }
  return std::pow(g2, 0.5 * (p - 2.0)) * (lap + (p - 2.0) * delta_inf(jet) / g2);
}

double laplacian(const FieldSystem& s, const Polynomial& u, LaplacianKind kind, std::span<const double> x, double p) {
  if (kind == LaplacianKind::delta_x) return delta_x(s, u).evaluate(x);
  const JetEvaluator jets(s, u);
  const auto jet = jets(x);
  return kind == LaplacianKind::delta_p ? delta_p(jet, p) : delta_inf(jet);
}

OperatorValue evaluate_operator(const FieldSystem& s, const Polynomial& u, const OperatorSpec& spec,
                                std::optional<std::vector<double>> point) {
  OperatorValue out{spec, 0.0};
  switch (spec.kind) {
    case OperatorKind::f_j:
      out.value = f_j(s, u, spec.j);
      break;
    case OperatorKind::script_f2_alpha:
      out.value = f2_family(s, u, spec.alpha);
      break;
    case OperatorKind::script_e2:
      out.value = e2(s, u);
      break;
    case OperatorKind::script_f2_star:
      out.value = f2_star(s, u);
      break;
    case OperatorKind::delta_x:
      out.value = delta_x(s, u);
      break;
    case OperatorKind::delta_p:
    case OperatorKind::delta_inf: {
      if (!point) throw RejectedInput("delta_p and delta_inf are evaluated pointwise and need a point");
      const auto jet = JetEvaluator(s, u)(*point);
      out.value = spec.kind == OperatorKind::delta_p ? delta_p(jet, spec.p) : delta_inf(jet);
      break;
    }
  }
  return out;
}

double f2_ellipticity_margin(const Matrix<double>& sym) {
  const auto m = static_cast<Eigen::Index>(sym.rows());
  Eigen::MatrixXd a(m, m);
  double tr = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) tr += sym(static_cast<std::size_t>(i), static_cast<std::size_t>(i));
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      a(i, j) = (i == j ? tr : 0.0) - sym(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

KConvexReport is_k_convex(const JetEvaluator& jets, std::size_t k, const std::vector<std::vector<double>>& samples,
                          double tol) {
  if (k < 1 || k > jets.m())
    throw RejectedInput("k must satisfy 1 <= k <= m = " + std::to_string(jets.m()) + ", got " + std::to_string(k));
  if (samples.empty()) throw RejectedInput("k-convexity check needs at least one sample point");
  KConvexReport r;
  r.worst_value = std::numeric_limits<double>::infinity();
  for (const auto& x : samples) {
    const auto jet = jets(x);
    for (std::size_t j = 1; j <= k; ++j) {
      const double v = sigma_j(jet.sym, j);
      if (v < r.worst_value) {
        r.worst_value = v;
        r.worst_j = j;
        r.worst_point = x;
      }
    }
  }
  r.holds = r.worst_value >= -tol;
  return r;
}

KConvexReport is_k_convex(const FieldSystem& s, const Polynomial& u, std::size_t k,
                          const std::vector<std::vector<double>>& samples, double tol) {
  require_dimension(s, u);
  return is_k_convex(JetEvaluator(s, u), k, samples, tol);
}

}  // namespace subhess
