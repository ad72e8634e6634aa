#include "subhess/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include <Eigen/Dense>

#include "subhess/corpus.hpp"
#include "subhess/error.hpp"

namespace subhess {

CCBudget CCBudget::coarse() {
  CCBudget b;
  b.segments = 16;
  b.restarts = 4;
  b.iterations = 60;
  return b;
}

double reach_tolerance(std::span<const double> y) {
  double n2 = 0.0;
  for (double v : y) n2 += v * v;
  return 1e-3 * (1.0 + std::sqrt(n2));
}

namespace {

// Frame values X_i^k(x) and derivatives d_l X_i^k(x) with zero entries skipped.
class Frame {
 public:
  explicit Frame(const FieldSystem& s) : n_(s.n()), m_(s.m()) {
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t k = 0; k < n_; ++k) {
        const auto& b = s[i].coefficient(k);
        if (b.is_zero()) continue;
        Entry e{i, k, CompiledPolynomial(b), {}};
        for (std::size_t l = 0; l < n_; ++l) {
          const auto d = b.derivative(l);
          if (!d.is_zero()) e.grad.emplace_back(l, CompiledPolynomial(d));
        }
        entries_.push_back(std::move(e));
      }
  }
  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }

  // X[i * n + k] and, when DX is non-null, DX[(i * n + k) * n + l].
  void eval(std::span<const double> x, double* X, double* DX) const {
    std::fill(X, X + m_ * n_, 0.0);
    if (DX) std::fill(DX, DX + m_ * n_ * n_, 0.0);
    for (const auto& e : entries_) {
      X[e.i * n_ + e.k] = e.value(x);
      if (DX)
        for (const auto& [l, p] : e.grad) DX[(e.i * n_ + e.k) * n_ + l] = p(x);
    }
  }

 private:
  struct Entry {
    std::size_t i, k;
    CompiledPolynomial value;
    std::vector<std::pair<std::size_t, CompiledPolynomial>> grad;
  };
  std::size_t n_, m_;
  std::vector<Entry> entries_;
};

// Flow of one constant-control segment. The state is x (n), then the
// variational matrix M = dx_end/dx_start (n x n), then G = dx_end/dc (n x m).
class SegmentFlow {
 public:
  explicit SegmentFlow(const Frame& f)
      : f_(f), n_(f.n()), m_(f.m()), X_(m_ * n_), DX_(m_ * n_ * n_), DV_(n_ * n_) {}

  std::size_t state_size(bool sens) const { return sens ? n_ + n_ * n_ + n_ * m_ : n_; }

  void rhs(const double* y, const double* c, bool sens, double* dy) {
    f_.eval({y, n_}, X_.data(), sens ? DX_.data() : nullptr);
    for (std::size_t k = 0; k < n_; ++k) {
      double v = 0.0;
      for (std::size_t i = 0; i < m_; ++i) v += c[i] * X_[i * n_ + k];
      dy[k] = v;
    }
    if (!sens) return;
    for (std::size_t k = 0; k < n_; ++k)
      for (std::size_t l = 0; l < n_; ++l) {
        double v = 0.0;
        for (std::size_t i = 0; i < m_; ++i) v += c[i] * DX_[(i * n_ + k) * n_ + l];
        DV_[k * n_ + l] = v;
      }
    const double* M = y + n_;
    const double* G = M + n_ * n_;
    double* dM = dy + n_;
    double* dG = dM + n_ * n_;
    for (std::size_t k = 0; k < n_; ++k) {
      for (std::size_t j = 0; j < n_; ++j) {
        double v = 0.0;
        for (std::size_t l = 0; l < n_; ++l) v += DV_[k * n_ + l] * M[l * n_ + j];
        dM[k * n_ + j] = v;
      }
      for (std::size_t i = 0; i < m_; ++i) {
        double v = X_[i * n_ + k];
        for (std::size_t l = 0; l < n_; ++l) v += DV_[k * n_ + l] * G[l * m_ + i];
        dG[k * m_ + i] = v;
      }
    }
  }

  // Integrates y over dt with `steps` RK4 steps; y must be initialised.
  void integrate(std::vector<double>& y, const double* c, double dt, std::size_t steps, bool sens) {
    const std::size_t s = state_size(sens);
    k1_.resize(s);
    k2_.resize(s);
    k3_.resize(s);
    k4_.resize(s);
    tmp_.resize(s);
    const double h = dt / static_cast<double>(steps);
    for (std::size_t st = 0; st < steps; ++st) {
      rhs(y.data(), c, sens, k1_.data());
      for (std::size_t q = 0; q < s; ++q) tmp_[q] = y[q] + 0.5 * h * k1_[q];
      rhs(tmp_.data(), c, sens, k2_.data());
      for (std::size_t q = 0; q < s; ++q) tmp_[q] = y[q] + 0.5 * h * k2_[q];
      rhs(tmp_.data(), c, sens, k3_.data());
      for (std::size_t q = 0; q < s; ++q) tmp_[q] = y[q] + h * k3_[q];
      rhs(tmp_.data(), c, sens, k4_.data());
      for (std::size_t q = 0; q < s; ++q) y[q] += h / 6.0 * (k1_[q] + 2.0 * k2_[q] + 2.0 * k3_[q] + k4_[q]);
    }
  }

 private:
  const Frame& f_;
  std::size_t n_, m_;
  std::vector<double> X_, DX_, DV_, k1_, k2_, k3_, k4_, tmp_;
};

// Projected Levenberg-Marquardt on the endpoint map of piecewise-constant controls.
class Shooter {
 public:
  Shooter(const Frame& f, std::span<const double> x, std::span<const double> y, const CCBudget& b)
      : f_(f), flow_(f), n_(f.n()), m_(f.m()), K_(b.segments), x_(x.begin(), x.end()), y_(y.begin(), y.end()),
        budget_(b), tol_(reach_tolerance(y)) {}

  double tolerance() const { return tol_; }

  // Endpoint residual gamma(T) - y; optionally the Jacobian (n x K m, row-major).
  double residual(const std::vector<double>& c, double T, std::vector<double>& r, std::vector<double>* J) {
    const bool sens = J != nullptr;
    const double dt = T / static_cast<double>(K_);
    std::vector<double> state(flow_.state_size(sens));
    std::vector<double> xs(x_);
    if (sens) {
      Ms_.assign(K_ * n_ * n_, 0.0);
      Gs_.assign(K_ * n_ * m_, 0.0);
    }
    for (std::size_t k = 0; k < K_; ++k) {
      std::fill(state.begin(), state.end(), 0.0);
      std::copy(xs.begin(), xs.end(), state.begin());
      if (sens)
        for (std::size_t d = 0; d < n_; ++d) state[n_ + d * n_ + d] = 1.0;
      flow_.integrate(state, c.data() + k * m_, dt, budget_.substeps, sens);
      std::copy(state.begin(), state.begin() + static_cast<std::ptrdiff_t>(n_), xs.begin());
      if (sens) {
        std::copy(state.begin() + static_cast<std::ptrdiff_t>(n_), state.begin() + static_cast<std::ptrdiff_t>(n_ + n_ * n_),
                  Ms_.begin() + static_cast<std::ptrdiff_t>(k * n_ * n_));
        std::copy(state.begin() + static_cast<std::ptrdiff_t>(n_ + n_ * n_), state.end(),
                  Gs_.begin() + static_cast<std::ptrdiff_t>(k * n_ * m_));
      }
    }
    r.resize(n_);
    double norm2 = 0.0;
    for (std::size_t d = 0; d < n_; ++d) {
      r[d] = xs[d] - y_[d];
      norm2 += r[d] * r[d];
    }
    if (sens) {
      // J_k = M_{K-1} ... M_{k+1} G_k, accumulated backwards.
      J->assign(n_ * K_ * m_, 0.0);
      std::vector<double> P(n_ * n_, 0.0), Q(n_ * n_);
      for (std::size_t d = 0; d < n_; ++d) P[d * n_ + d] = 1.0;
      for (std::size_t k = K_; k-- > 0;) {
        const double* G = Gs_.data() + k * n_ * m_;
        for (std::size_t a = 0; a < n_; ++a)
          for (std::size_t i = 0; i < m_; ++i) {
            double v = 0.0;
            for (std::size_t l = 0; l < n_; ++l) v += P[a * n_ + l] * G[l * m_ + i];
            (*J)[a * K_ * m_ + k * m_ + i] = v;
          }
        const double* M = Ms_.data() + k * n_ * n_;
        for (std::size_t a = 0; a < n_; ++a)
          for (std::size_t b = 0; b < n_; ++b) {
            double v = 0.0;
            for (std::size_t l = 0; l < n_; ++l) v += P[a * n_ + l] * M[l * n_ + b];
            Q[a * n_ + b] = v;
          }
        P.swap(Q);
      }
    }
    return std::sqrt(norm2);
  }

  void project(std::vector<double>& c) const {
    for (std::size_t k = 0; k < K_; ++k) {
      double n2 = 0.0;
      for (std::size_t i = 0; i < m_; ++i) n2 += c[k * m_ + i] * c[k * m_ + i];
      if (n2 > 1.0) {
        const double s = 1.0 / std::sqrt(n2);
        for (std::size_t i = 0; i < m_; ++i) c[k * m_ + i] *= s;
      }
    }
  }

  // Runs LM from c; returns the final residual norm and leaves the best controls in c.
  double solve(std::vector<double>& c, double T) {
    project(c);
    std::vector<double> r, J, trial(c.size()), rt;
    double err = residual(c, T, r, &J);
    double lambda = 1e-3;
    std::size_t stall = 0;
    const std::size_t N = K_ * m_;
    Eigen::MatrixXd A(n_, n_);
    Eigen::VectorXd rhs(n_);
    for (std::size_t it = 0; it < budget_.iterations && err > tol_; ++it) {
      // Minimum-norm damped step: delta = -J^T (J J^T + lambda s I)^{-1} r.
      double trace = 0.0;
      for (std::size_t a = 0; a < n_; ++a)
        for (std::size_t b = 0; b < n_; ++b) {
          double v = 0.0;
          for (std::size_t q = 0; q < N; ++q) v += J[a * N + q] * J[b * N + q];
          A(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
          if (a == b) trace += v;
        }
      const double scale = trace / static_cast<double>(n_) + 1e-300;
      bool accepted = false;
      while (!accepted && lambda < 1e10) {
        Eigen::MatrixXd Ad = A;
        for (std::size_t a = 0; a < n_; ++a) Ad(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) += lambda * scale;
        for (std::size_t a = 0; a < n_; ++a) rhs(static_cast<Eigen::Index>(a)) = r[a];
        const Eigen::VectorXd w = Ad.ldlt().solve(rhs);
        for (std::size_t q = 0; q < N; ++q) {
          double v = 0.0;
          for (std::size_t a = 0; a < n_; ++a) v += J[a * N + q] * w(static_cast<Eigen::Index>(a));
          trial[q] = c[q] - v;
        }
        project(trial);
        const double e = residual(trial, T, rt, nullptr);
        if (e < err) {
          accepted = true;
          stall = e > err * 0.999 ? stall + 1 : 0;
          c = trial;
          err = residual(c, T, r, &J);
          lambda = std::max(lambda / 3.0, 1e-12);
        } else {
          lambda *= 4.0;
        }
      }
      if (!accepted || stall >= 8) break;
    }
    return err;
  }

  std::vector<double> random_controls(Rng& rng, double T) const {
    std::vector<double> c(K_ * m_, 0.0);
    if (m_ >= 2 && rng.unit() < 0.5) {
      // Circling: the direction turns at a constant rate in a random plane.
      const std::size_t a = static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(m_) - 1));
      std::size_t b = static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(m_) - 2));
      if (b >= a) ++b;
      const double theta0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double turns = rng.uniform(-2.0, 2.0);
      for (std::size_t k = 0; k < K_; ++k) {
        const double th = theta0 + 2.0 * std::numbers::pi * turns * (static_cast<double>(k) + 0.5) / static_cast<double>(K_);
        c[k * m_ + a] = std::cos(th);
        c[k * m_ + b] = std::sin(th);
      }
    } else {
      for (auto& v : c) v = rng.normal();
      project(c);
    }
    (void)T;
    return c;
  }

  std::size_t unknowns() const { return K_ * m_; }

  CCPath make_path(const std::vector<double>& c, double T, double err) {
    CCPath p;
    p.T = T;
    p.endpoint_error = err;
    const double dt = T / static_cast<double>(K_);
    std::vector<double> state(x_);
    p.nodes.push_back(state);
    for (std::size_t k = 0; k < K_; ++k) {
      flow_.integrate(state, c.data() + k * m_, dt, budget_.substeps, false);
      p.nodes.push_back(state);
      p.controls.emplace_back(c.begin() + static_cast<std::ptrdiff_t>(k * m_),
                              c.begin() + static_cast<std::ptrdiff_t>((k + 1) * m_));
    }
    return p;
  }

 private:
  const Frame& f_;
  SegmentFlow flow_;
  std::size_t n_, m_, K_;
  std::vector<double> x_, y_;
  CCBudget budget_;
  double tol_;
  std::vector<double> Ms_, Gs_;
};

// Tries the warm start (if any) and then budget.restarts random starts.
bool feasible(Shooter& sh, double T, std::vector<double>& warm, bool have_warm, Rng& rng, std::size_t restarts,
              std::vector<double>& found, double& err) {
  if (have_warm) {
    std::vector<double> c = warm;
    err = sh.solve(c, T);
    if (err <= sh.tolerance()) {
      found = std::move(c);
      return true;
    }
  }
  for (std::size_t r = 0; r < restarts; ++r) {
    std::vector<double> c = sh.random_controls(rng, T);
    err = sh.solve(c, T);
    if (err <= sh.tolerance()) {
      found = std::move(c);
      return true;
    }
  }
  return false;
}

void check_points(const FieldSystem& s, std::span<const double> x, std::span<const double> y) {
  if (x.size() != s.n() || y.size() != s.n()) throw DimensionMismatch("cc_distance: point dimension differs from the system");
}

}  // namespace

bool cc_reachable(const FieldSystem& s, std::span<const double> x, std::span<const double> y, double T,
                  const CCBudget& budget) {
  check_points(s, x, y);
  if (std::equal(x.begin(), x.end(), y.begin())) return true;
  if (!(T > 0)) return false;
  const Frame frame(s);
  Shooter sh(frame, x, y, budget);
  Rng rng(budget.seed);
  std::vector<double> none, found;
  double err = 0.0;
  return feasible(sh, T, none, false, rng, budget.restarts, found, err);
}

CCDistance cc_distance(const FieldSystem& s, std::span<const double> x, std::span<const double> y,
                       const CCBudget& budget) {
  check_points(s, x, y);
  if (budget.segments == 0 || budget.substeps == 0) throw RejectedInput("cc_distance needs at least one segment and substep");
  CCDistance out;
  if (std::equal(x.begin(), x.end(), y.begin())) {
    out.path.nodes.emplace_back(x.begin(), x.end());
    return out;
  }
  const Frame frame(s);
  Shooter sh(frame, x, y, budget);
  Rng rng(budget.seed);
  double euclid = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) euclid += (y[d] - x[d]) * (y[d] - x[d]);
  euclid = std::sqrt(euclid);

  std::vector<double> best, found;
  double best_err = 0.0, err = 0.0;
  double T = euclid, T_hi = 0.0, T_lo = 0.0;
  if (feasible(sh, T, best, false, rng, budget.restarts, found, err)) {
    best = found;
    best_err = err;
    T_hi = T;
    // Shrink until infeasible.
    for (std::size_t d = 0; d < budget.max_doublings; ++d) {
      const double t = T_hi / 2.0;
      if (!feasible(sh, t, best, true, rng, budget.restarts, found, err)) {
        T_lo = t;
        break;
      }
      best = found;
      best_err = err;
      T_hi = t;
    }
  } else {
    T_lo = T;
    for (std::size_t d = 0; d < budget.max_doublings && T_hi == 0.0; ++d) {
      const double t = T_lo * 2.0;
      if (feasible(sh, t, best, !best.empty(), rng, budget.restarts, found, err)) {
        best = found;
        best_err = err;
        T_hi = t;
      } else {
        T_lo = t;
      }
    }
    if (T_hi == 0.0)
      throw UnreachableWithinBudget("no feasible sub-unitary path found up to horizon " + std::to_string(T_lo));
  }
  while (T_hi - T_lo > budget.rel_tol * T_hi) {
    const double t = 0.5 * (T_lo + T_hi);
    if (feasible(sh, t, best, true, rng, budget.restarts, found, err)) {
      best = found;
      best_err = err;
      T_hi = t;
    } else {
      T_lo = t;
    }
  }
  out.T = T_hi;
  out.T_infeasible = T_lo;
  out.path = sh.make_path(best, T_hi, best_err);
  return out;
}

double path_endpoint_error(const FieldSystem& s, const CCPath& path, std::span<const double> y, std::size_t substeps) {
  if (path.nodes.empty()) throw RejectedInput("empty path");
  const Frame frame(s);
  SegmentFlow flow(frame);
  std::vector<double> state = path.nodes.front();
  const double dt = path.controls.empty() ? 0.0 : path.T / static_cast<double>(path.controls.size());
  for (const auto& c : path.controls) flow.integrate(state, c.data(), dt, substeps, false);
  double e = 0.0;
  for (std::size_t d = 0; d < state.size(); ++d) e += (state[d] - y[d]) * (state[d] - y[d]);
  return std::sqrt(e);
}

void write_path_csv(std::ostream& out, const CCPath& path) {
  const std::size_t n = path.nodes.empty() ? 0 : path.nodes.front().size();
  const std::size_t m = path.controls.empty() ? 0 : path.controls.front().size();
  out << "t";
  for (std::size_t d = 0; d < n; ++d) out << ",x" << d + 1;
  for (std::size_t i = 0; i < m; ++i) out << ",c" << i + 1;
  out << '\n';
  char buf[32];
  for (std::size_t k = 0; k < path.nodes.size(); ++k) {
    const double t = path.controls.empty() ? 0.0 : path.T * static_cast<double>(k) / static_cast<double>(path.controls.size());
    std::snprintf(buf, sizeof buf, "%.17g", t);
    out << buf;
    for (double v : path.nodes[k]) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ',' << buf;
    }
    // Control active on [t_k, t_{k+1}); the last node has none.
    for (std::size_t i = 0; i < m; ++i) {
      if (k < path.controls.size()) {
        std::snprintf(buf, sizeof buf, "%.17g", path.controls[k][i]);
        out << ',' << buf;
      } else {
        out << ',';
      }
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------- volumes

namespace {

// Endpoints of random and circling control sequences of horizon R.
void explore_box(const FieldSystem& s, std::span<const double> x, double R, const VolumeOptions& o,
                 std::vector<double>& lo, std::vector<double>& hi) {
  const std::size_t n = s.n();
  const Frame frame(s);
  lo.assign(x.begin(), x.end());
  hi.assign(x.begin(), x.end());
  // A throwaway target: only the control generator and the flow are used.
  Shooter sh(frame, x, x, o.budget);
  Rng rng(derive_seed(o.seed, 0x9000000000ULL));
  std::vector<double> none;
  for (std::size_t p = 0; p < o.explore_paths; ++p) {
    const auto c = sh.random_controls(rng, R);
    // Full-speed controls reach the farthest.
    auto full = c;
    for (std::size_t k = 0; k < o.budget.segments; ++k) {
      double n2 = 0.0;
      for (std::size_t i = 0; i < s.m(); ++i) n2 += full[k * s.m() + i] * full[k * s.m() + i];
      if (n2 > 0)
        for (std::size_t i = 0; i < s.m(); ++i) full[k * s.m() + i] /= std::sqrt(n2);
    }
    const auto path = sh.make_path(full, R, 0.0);
    for (const auto& node : path.nodes)
      for (std::size_t d = 0; d < n; ++d) {
        lo[d] = std::min(lo[d], node[d]);
        hi[d] = std::max(hi[d], node[d]);
      }
  }
  for (std::size_t d = 0; d < n; ++d) {
    const double pad = std::max(0.1 * (hi[d] - lo[d]), 1e-3 * R);
    lo[d] -= pad;
    hi[d] += pad;
  }
}

}  // namespace

VolumeEstimate ball_volume(const FieldSystem& s, std::span<const double> x, double R, const VolumeOptions& o) {
  if (x.size() != s.n()) throw DimensionMismatch("ball_volume: point dimension differs from the system");
  if (!(R > 0)) throw RejectedInput("ball radius must be positive");
  if (o.samples < 1000) throw RejectedInput("ball volume needs at least 1000 samples");
  const std::size_t n = s.n();
  VolumeEstimate v;
  v.R = R;
  v.samples = o.samples;
  explore_box(s, x, R, o, v.box_lo, v.box_hi);
  for (std::size_t attempt = 0;; ++attempt) {
    std::vector<char> hit(o.samples, 0);
    std::vector<std::vector<double>> pts(o.samples, std::vector<double>(n));
    for (std::size_t i = 0; i < o.samples; ++i) {
      Rng rng(derive_seed(o.seed, 2 * i));
      for (std::size_t d = 0; d < n; ++d) pts[i][d] = rng.uniform(v.box_lo[d], v.box_hi[d]);
    }
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t q = 0; q < static_cast<std::ptrdiff_t>(o.samples); ++q) {
      const auto i = static_cast<std::size_t>(q);
      CCBudget b = o.budget;
      b.seed = derive_seed(o.seed, 2 * i + 1);
      hit[i] = cc_reachable(s, x, pts[i], R, b) ? 1 : 0;
    }
    // Hits near a face suggest the ball sticks out of the box.
    std::vector<bool> grow_lo(n, false), grow_hi(n, false);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < o.samples; ++i) {
      if (!hit[i]) continue;
      ++inside;
      for (std::size_t d = 0; d < n; ++d) {
        const double w = v.box_hi[d] - v.box_lo[d];
        if (pts[i][d] - v.box_lo[d] < 0.02 * w) grow_lo[d] = true;
        if (v.box_hi[d] - pts[i][d] < 0.02 * w) grow_hi[d] = true;
      }
    }
    v.inside = inside;
    double box = 1.0;
    for (std::size_t d = 0; d < n; ++d) box *= v.box_hi[d] - v.box_lo[d];
    const double p = static_cast<double>(inside) / static_cast<double>(o.samples);
    v.volume = p * box;
    v.stderr_ = box * std::sqrt(p * (1.0 - p) / static_cast<double>(o.samples));
    const bool any = std::any_of(grow_lo.begin(), grow_lo.end(), [](bool b) { return b; }) ||
                     std::any_of(grow_hi.begin(), grow_hi.end(), [](bool b) { return b; });
    if (!any || attempt >= o.max_enlargements) {
      if (any) v.log.push_back("bounding box still touched by the ball after the last enlargement");
      break;
    }
    // Each touched face moves out by half the current width.
    for (std::size_t d = 0; d < n; ++d) {
      const double w = v.box_hi[d] - v.box_lo[d];
      if (grow_lo[d]) {
        v.box_lo[d] -= 0.5 * w;
        v.log.push_back("enlarged bounding box below on axis " + std::to_string(d + 1));
      }
      if (grow_hi[d]) {
        v.box_hi[d] += 0.5 * w;
        v.log.push_back("enlarged bounding box above on axis " + std::to_string(d + 1));
      }
    }
    ++v.enlargements;
  }
  return v;
}

HomogeneousDimension homogeneous_dimension(const FieldSystem& s, std::span<const double> x,
                                           const std::vector<double>& radii, const VolumeOptions& o) {
  if (radii.size() < 3) throw RejectedInput("homogeneous dimension fit needs at least 3 radii");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw RejectedInput("radii must be strictly increasing");
  if (!(radii.front() > 0) || radii.back() < 4.0 * radii.front()) throw RejectedInput("radii must span a factor of at least 4");
  HomogeneousDimension h;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    VolumeOptions oi = o;
    oi.seed = derive_seed(o.seed, 0x1000 + i);
    h.volumes.push_back(ball_volume(s, x, radii[i], oi));
  }
  h.status = "ok";
  for (const auto& v : h.volumes)
    if (v.inside < 30 || v.stderr_ > 0.25 * v.volume) h.status = "inconclusive";
  if (h.status != "ok") return h;
  double mx = 0, my = 0;
  const double k = static_cast<double>(radii.size());
  for (const auto& v : h.volumes) {
    mx += std::log(v.R);
    my += std::log(v.volume);
  }
  mx /= k;
  my /= k;
  double sxy = 0, sxx = 0;
  for (const auto& v : h.volumes) {
    sxy += (std::log(v.R) - mx) * (std::log(v.volume) - my);
    sxx += (std::log(v.R) - mx) * (std::log(v.R) - mx);
  }
  h.Q_fit = sxy / sxx;
  h.Q_ceil = static_cast<int>(std::ceil(h.Q_fit - 1e-9));
  h.doubling_ok = true;
  for (std::size_t i = 0; i + 1 < h.volumes.size(); ++i) {
    const auto& a = h.volumes[i];
    const auto& b = h.volumes[i + 1];
    const double t = a.R / b.R;
    const double tq = std::pow(t, h.Q_ceil);
    const double allowance = 3.0 * std::sqrt(a.stderr_ * a.stderr_ + tq * tq * b.stderr_ * b.stderr_);
    if (a.volume + allowance < tq * b.volume) h.doubling_ok = false;
  }
  return h;
}

}  // namespace subhess
