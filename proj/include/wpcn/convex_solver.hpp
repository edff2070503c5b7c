#pragma once

// Self-contained solver for smooth convex programs with inequality
// constraints and optional linear equalities. Feasible-start log-barrier
// with damped Newton steps; the LP entry point adds a phase-I search for a
// strictly feasible point. Everything is deterministic: fixed iteration
// order, no randomized components.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wpcn/bounds.hpp"
#include "wpcn/linalg.hpp"

namespace wpcn::solver {

enum class ConstraintKind { affine, convex_smooth };

// One inequality g(x) <= 0. Constraints read the full physical variable
// vector but report gradients/Hessians only over their support indices.
class ConstraintFn {
 public:
  ConstraintFn(std::vector<int> support, ConstraintKind kind)
      : support_(std::move(support)), kind_(kind) {}
  virtual ~ConstraintFn() = default;

  const std::vector<int>& support() const { return support_; }
  ConstraintKind kind() const { return kind_; }

  virtual double value(const std::vector<double>& x) const = 0;
  virtual void gradient(const std::vector<double>& x, std::span<double> g) const = 0;
  // h is a support-sized square matrix, already zeroed.
  virtual void hessian(const std::vector<double>& x, Mat& h) const { (void)x, (void)h; }

 private:
  std::vector<int> support_;
  ConstraintKind kind_;
};

// sum_i coeff_i * x[idx_i] + offset <= 0
class AffineConstraint final : public ConstraintFn {
 public:
  AffineConstraint(std::vector<int> support, std::vector<double> coeffs, double offset)
      : ConstraintFn(std::move(support), ConstraintKind::affine),
        coeffs_(std::move(coeffs)),
        offset_(offset) {
    if (coeffs_.size() != this->support().size())
      throw std::invalid_argument("AffineConstraint: coefficient count mismatch");
  }

  double value(const std::vector<double>& x) const override {
    double v = offset_;
    const auto& sup = support();
    for (std::size_t i = 0; i < sup.size(); ++i) v += coeffs_[i] * x[sup[i]];
    return v;
  }
  void gradient(const std::vector<double>&, std::span<double> g) const override {
    std::copy(coeffs_.begin(), coeffs_.end(), g.begin());
  }

 private:
  std::vector<double> coeffs_;
  double offset_;
};

// Convenience: lo <= x[idx] encoded as lo - x <= 0, and x[idx] <= hi.
inline std::unique_ptr<AffineConstraint> lower_bound(int idx, double lo) {
  return std::make_unique<AffineConstraint>(std::vector<int>{idx}, std::vector<double>{-1.0}, lo);
}
inline std::unique_ptr<AffineConstraint> upper_bound(int idx, double hi) {
  return std::make_unique<AffineConstraint>(std::vector<int>{idx}, std::vector<double>{1.0}, -hi);
}

// |(x,y) - center|^2 - rhs <= 0 over two position variables.
class BallConstraint final : public ConstraintFn {
 public:
  BallConstraint(int ix, int iy, Vec2 center, double rhs)
      : ConstraintFn({ix, iy}, ConstraintKind::convex_smooth), center_(center), rhs_(rhs) {}

  double value(const std::vector<double>& x) const override {
    const auto& s = support();
    const double dx = x[s[0]] - center_.x, dy = x[s[1]] - center_.y;
    return dx * dx + dy * dy - rhs_;
  }
  void gradient(const std::vector<double>& x, std::span<double> g) const override {
    const auto& s = support();
    g[0] = 2.0 * (x[s[0]] - center_.x);
    g[1] = 2.0 * (x[s[1]] - center_.y);
  }
  void hessian(const std::vector<double>&, Mat& h) const override {
    h(0, 0) = 2.0;
    h(1, 1) = 2.0;
  }

 private:
  Vec2 center_;
  double rhs_;
};

// |a - b|^2 - rhs <= 0 over two position pairs (speed / periodicity).
class MoveConstraint final : public ConstraintFn {
 public:
  MoveConstraint(int axi, int ayi, int bxi, int byi, double rhs)
      : ConstraintFn({axi, ayi, bxi, byi}, ConstraintKind::convex_smooth), rhs_(rhs) {}

  double value(const std::vector<double>& x) const override {
    const auto& s = support();
    const double dx = x[s[0]] - x[s[2]], dy = x[s[1]] - x[s[3]];
    return dx * dx + dy * dy - rhs_;
  }
  void gradient(const std::vector<double>& x, std::span<double> g) const override {
    const auto& s = support();
    const double dx = x[s[0]] - x[s[2]], dy = x[s[1]] - x[s[3]];
    g[0] = 2.0 * dx;
    g[1] = 2.0 * dy;
    g[2] = -2.0 * dx;
    g[3] = -2.0 * dy;
  }
  void hessian(const std::vector<double>&, Mat& h) const override {
    h(0, 0) = h(1, 1) = h(2, 2) = h(3, 3) = 2.0;
    h(2, 0) = h(3, 1) = -2.0;
    h(0, 2) = h(1, 3) = -2.0;
  }

 private:
  double rhs_;
};

// |(x,y) - u|^2 - z <= 0: ties a squared-distance variable to a position.
class AuxDistanceConstraint final : public ConstraintFn {
 public:
  AuxDistanceConstraint(int ix, int iy, int iz, Vec2 u)
      : ConstraintFn({ix, iy, iz}, ConstraintKind::convex_smooth), u_(u) {}

  double value(const std::vector<double>& x) const override {
    const auto& s = support();
    const double dx = x[s[0]] - u_.x, dy = x[s[1]] - u_.y;
    return dx * dx + dy * dy - x[s[2]];
  }
  void gradient(const std::vector<double>& x, std::span<double> g) const override {
    const auto& s = support();
    g[0] = 2.0 * (x[s[0]] - u_.x);
    g[1] = 2.0 * (x[s[1]] - u_.y);
    g[2] = -1.0;
  }
  void hessian(const std::vector<double>&, Mat& h) const override {
    h(0, 0) = 2.0;
    h(1, 1) = 2.0;
  }

 private:
  Vec2 u_;
};

// One slot's contribution to a GT throughput constraint. Either the squared
// distance or the power (or both) may be decision variables; fixed parts use
// the *_fix values. z_hat is the CCCP linearization point; with the distance
// fixed and z_hat == z_fix the surrogate equals the exact rate.
struct RateTerm {
  int z_index = -1;
  int p_index = -1;
  double z_fix = 0.0;
  double p_fix = 0.0;
  double z_hat = 0.0;
  double weight = 0.0;  // tau_k[n] / N
};

// R_min - sum_n weight_n * rate_lower(z_n, p_n | z_hat_n) <= 0
class MinRateConstraint final : public ConstraintFn {
 public:
  MinRateConstraint(int rmin_index, double altitude, double snr_coeff, std::vector<RateTerm> terms)
      : ConstraintFn(build_support(rmin_index, terms), ConstraintKind::convex_smooth),
        h_(altitude),
        c_(snr_coeff),
        terms_(std::move(terms)) {
    int pos = 1;
    offsets_.reserve(terms_.size());
    for (const auto& t : terms_) {
      Offsets o;
      if (t.z_index >= 0) o.z = pos++;
      if (t.p_index >= 0) o.p = pos++;
      offsets_.push_back(o);
    }
  }

  double value(const std::vector<double>& x) const override {
    const auto& s = support();
    double acc = x[s[0]];
    const double h2 = h_ * h_;
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      const auto& t = terms_[i];
      const double z = t.z_index >= 0 ? x[t.z_index] : t.z_fix;
      const double p = t.p_index >= 0 ? x[t.p_index] : t.p_fix;
      // Out-of-domain probes (negative z or p during the line search) yield
      // NaN here, which the solver treats as infeasible.
      const double w = z + h2 + c_ * p;
      const double wh = t.z_hat + h2;
      acc -= t.weight *
             (std::log2(w / wh) - ((z + h2) / wh - 1.0) * bounds::detail::kInvLn2);
    }
    return acc;
  }

  void gradient(const std::vector<double>& x, std::span<double> g) const override {
    g[0] = 1.0;
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      const auto& t = terms_[i];
      const double z = t.z_index >= 0 ? x[t.z_index] : t.z_fix;
      const double p = t.p_index >= 0 ? x[t.p_index] : t.p_fix;
      const auto d = bounds::rate_lower_derivs(z, p, t.z_hat, h_, c_);
      if (offsets_[i].z > 0) g[offsets_[i].z] = -t.weight * d.dz;
      if (offsets_[i].p > 0) g[offsets_[i].p] = -t.weight * d.dp;
    }
  }

  void hessian(const std::vector<double>& x, Mat& h) const override {
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      const auto& t = terms_[i];
      const double z = t.z_index >= 0 ? x[t.z_index] : t.z_fix;
      const double p = t.p_index >= 0 ? x[t.p_index] : t.p_fix;
      const auto d = bounds::rate_lower_derivs(z, p, t.z_hat, h_, c_);
      const int oz = offsets_[i].z, op = offsets_[i].p;
      if (oz > 0) h(oz, oz) = -t.weight * d.dzz;
      if (op > 0) h(op, op) = -t.weight * d.dpp;
      if (oz > 0 && op > 0) {
        h(op, oz) = -t.weight * d.dzp;
        h(oz, op) = -t.weight * d.dzp;
      }
    }
  }

 private:
  struct Offsets {
    int z = 0;
    int p = 0;
  };

  static std::vector<int> build_support(int rmin_index, const std::vector<RateTerm>& terms) {
    std::vector<int> s{rmin_index};
    for (const auto& t : terms) {
      if (t.z_index >= 0) s.push_back(t.z_index);
      if (t.p_index >= 0) s.push_back(t.p_index);
    }
    return s;
  }

  double h_;
  double c_;
  std::vector<RateTerm> terms_;
  std::vector<Offsets> offsets_;
};

struct SmoothProgram {
  int num_vars = 0;
  std::vector<double> maximize;  // objective coefficients (maximization)
  std::vector<std::unique_ptr<ConstraintFn>> constraints;
  // Sparse equality rows sum_j coeff * x[idx] = rhs.
  std::vector<std::vector<std::pair<int, double>>> eq_rows;
  std::vector<double> eq_rhs;
  std::vector<double> start;      // strictly feasible
  std::vector<double> var_scale;  // optional diagonal rescaling; empty = identity
  // Optional arrow structure: var_block[j] >= 0 groups variables that no
  // constraint couples across groups; -1 marks shared variables. When set
  // (and there are no equality rows), Newton systems factor block-wise.
  std::vector<int> var_block;
};

struct SolveStatus {
  enum class Term { optimal, max_iter, numeric, infeasible };

  std::vector<double> x;
  double objective = 0.0;
  double gap = std::numeric_limits<double>::infinity();
  int newton_iters = 0;
  Term reason = Term::numeric;
  std::string message;
  std::vector<double> stage_objectives;  // objective after each barrier stage
  std::vector<int> stage_newtons;        // newton steps spent per stage

  bool ok() const { return reason == Term::optimal; }
};

namespace detail {

struct Workspace {
  std::vector<double> x_phys;     // unscaled variables
  std::vector<double> vals;       // constraint values
  std::vector<double> grad;       // gradient of barrier merit (scaled space)
  std::vector<double> step;
  std::vector<double> grad_loc;
  std::vector<std::size_t> perm;  // pivot order of the factored Hessian
  Mat hess;                       // merit Hessian (scaled space), lower triangle
  Mat hess_factor;
  Mat hess_loc;
};

// Arrow partition of the variables: per-group lists plus the shared tail.
struct BlockPlan {
  bool valid = false;
  std::vector<std::vector<int>> groups;  // sorted global indices per group
  std::vector<int> shared;               // sorted global indices
};

inline BlockPlan make_block_plan(const SmoothProgram& prog) {
  BlockPlan plan;
  if (prog.var_block.empty() || !prog.eq_rows.empty()) return plan;
  if (static_cast<int>(prog.var_block.size()) != prog.num_vars) return plan;
  int num_groups = 0;
  for (int b : prog.var_block) num_groups = std::max(num_groups, b + 1);
  if (num_groups < 2) return plan;
  plan.groups.resize(num_groups);
  for (int j = 0; j < prog.num_vars; ++j) {
    const int b = prog.var_block[j];
    if (b < 0)
      plan.shared.push_back(j);
    else
      plan.groups[b].push_back(j);  // ascending by construction
  }
  for (const auto& con : prog.constraints) {
    int seen = -1;
    for (int j : con->support()) {
      const int b = prog.var_block[j];
      if (b < 0) continue;
      if (seen < 0) seen = b;
      if (b != seen) return plan;  // cross-group coupling: no arrow structure
    }
  }
  plan.valid = true;
  return plan;
}

// Factors the arrow system and computes u = H^{-1} g:
//   [D_1      C_1] with D_k the per-group blocks and S the shared block.
//   [   ...   ...]
//   [C^T...     S]
// Eliminating the groups leaves S_eff = S - sum_k C_k^T D_k^{-1} C_k.
// Returns false when anything goes non-finite at this pivot floor.
inline bool block_solve(const Mat& hess, const BlockPlan& plan, double floor_val,
                        const std::vector<double>& g, std::vector<double>& u) {
  const std::size_t nb = plan.groups.size();
  const std::size_t s = plan.shared.size();

  std::vector<Mat> l_k(nb);
  std::vector<std::vector<std::size_t>> perm_k(nb);
  std::vector<Mat> w_k(nb);                 // L^{-1} P C_k, gk x s
  std::vector<std::vector<double>> fwd(nb); // L^{-1} P g_k

  Mat s_eff(s, s);
  for (std::size_t a = 0; a < s; ++a)
    for (std::size_t b2 = 0; b2 <= a; ++b2) s_eff(a, b2) = hess(plan.shared[a], plan.shared[b2]);
  std::vector<double> rs(s);
  for (std::size_t a = 0; a < s; ++a) rs[a] = g[plan.shared[a]];

  auto lower = [&](int i, int j) { return i >= j ? hess(i, j) : hess(j, i); };

  for (std::size_t k = 0; k < nb; ++k) {
    const auto& vars = plan.groups[k];
    const std::size_t gk = vars.size();
    if (gk == 0) continue;
    Mat d(gk, gk);
    for (std::size_t a = 0; a < gk; ++a) {
      for (std::size_t b2 = 0; b2 <= a; ++b2) d(a, b2) = hess(vars[a], vars[b2]);
      d(a, a) += 1e-12;
    }
    if (!cholesky_pivoted(d, perm_k[k], floor_val)) return false;

    Mat w(gk, s);
    std::vector<double> col(gk);
    for (std::size_t c = 0; c < s; ++c) {
      for (std::size_t a = 0; a < gk; ++a) col[a] = lower(vars[perm_k[k][a]], plan.shared[c]);
      forward_solve(d, col);
      for (std::size_t a = 0; a < gk; ++a) {
        if (!std::isfinite(col[a])) return false;
        w(a, c) = col[a];
      }
    }
    // S_eff -= W^T W (lower triangle).
    for (std::size_t a = 0; a < s; ++a)
      for (std::size_t b2 = 0; b2 <= a; ++b2) {
        double acc = 0.0;
        for (std::size_t r = 0; r < gk; ++r) acc += w(r, a) * w(r, b2);
        s_eff(a, b2) -= acc;
      }
    std::vector<double>& f = fwd[k];
    f.resize(gk);
    for (std::size_t a = 0; a < gk; ++a) f[a] = g[vars[perm_k[k][a]]];
    forward_solve(d, f);
    for (std::size_t a = 0; a < gk; ++a)
      if (!std::isfinite(f[a])) return false;
    for (std::size_t c = 0; c < s; ++c) {
      double acc = 0.0;
      for (std::size_t r = 0; r < gk; ++r) acc += w(r, c) * f[r];
      rs[c] -= acc;
    }
    l_k[k] = std::move(d);
    w_k[k] = std::move(w);
  }

  double s_diag = 0.0;
  for (std::size_t a = 0; a < s; ++a) s_diag = std::max(s_diag, std::abs(s_eff(a, a)));
  std::vector<std::size_t> s_perm;
  if (!cholesky_pivoted(s_eff, s_perm, std::max(floor_val, 1e-16 * s_diag))) return false;
  cholesky_solve_pivoted(s_eff, s_perm, rs);
  for (std::size_t a = 0; a < s; ++a)
    if (!std::isfinite(rs[a])) return false;

  u.assign(g.size(), 0.0);
  for (std::size_t a = 0; a < s; ++a) u[plan.shared[a]] = rs[a];
  for (std::size_t k = 0; k < nb; ++k) {
    const auto& vars = plan.groups[k];
    const std::size_t gk = vars.size();
    if (gk == 0) continue;
    std::vector<double> back(gk);
    for (std::size_t a = 0; a < gk; ++a) {
      double acc = 0.0;
      for (std::size_t c = 0; c < s; ++c) acc += w_k[k](a, c) * rs[c];
      back[a] = fwd[k][a] - acc;
    }
    backward_solve(l_k[k], back);
    for (std::size_t a = 0; a < gk; ++a) {
      if (!std::isfinite(back[a])) return false;
      u[vars[perm_k[k][a]]] = back[a];
    }
  }
  return true;
}

inline void to_physical(const std::vector<double>& y, const std::vector<double>& s,
                        std::vector<double>& x) {
  for (std::size_t i = 0; i < y.size(); ++i) x[i] = y[i] * s[i];
}

// Evaluates every constraint at y; returns false if any value is >= 0 or
// non-finite (outside the barrier domain).
inline bool eval_all(const SmoothProgram& prog, const std::vector<double>& y,
                     const std::vector<double>& scale, Workspace& ws) {
  to_physical(y, scale, ws.x_phys);
  bool ok = true;
  for (std::size_t i = 0; i < prog.constraints.size(); ++i) {
    const double v = prog.constraints[i]->value(ws.x_phys);
    ws.vals[i] = v;
    if (!(v < 0.0) || !std::isfinite(v)) ok = false;
  }
  return ok;
}

inline double merit(const SmoothProgram& prog, const std::vector<double>& y,
                    const std::vector<double>& scale, double t, const Workspace& ws) {
  double f = 0.0;
  for (int j = 0; j < prog.num_vars; ++j) f += prog.maximize[j] * scale[j] * y[j];
  double phi = -t * f;
  for (double v : ws.vals) phi -= std::log(-v);
  return phi;
}

}  // namespace detail

// Maximizes prog.maximize^T x over the strictly feasible region until the
// barrier duality gap m/t drops below tol. t grows by 10x per stage; Newton
// steps use backtracking line search (slope 0.3, shrink 0.8) and Hessian
// regularization lambda*I starting at 1e-10 and growing 10x on factorization
// failure.
inline SolveStatus solve_barrier(const SmoothProgram& prog, double tol) {
  const int n = prog.num_vars;
  const std::size_t m = prog.constraints.size();
  if (n <= 0) throw std::invalid_argument("solve_barrier: empty program");
  if (static_cast<int>(prog.start.size()) != n || static_cast<int>(prog.maximize.size()) != n)
    throw std::invalid_argument("solve_barrier: start/objective size mismatch");
  if (prog.eq_rows.size() != prog.eq_rhs.size())
    throw std::invalid_argument("solve_barrier: equality rows/rhs mismatch");

  std::vector<double> scale = prog.var_scale;
  if (scale.empty()) scale.assign(n, 1.0);
  for (double s : scale)
    if (!(s > 0.0)) throw std::invalid_argument("solve_barrier: non-positive variable scale");

  detail::Workspace ws;
  ws.x_phys.assign(n, 0.0);
  ws.vals.assign(m, 0.0);
  ws.grad.assign(n, 0.0);
  ws.step.assign(n, 0.0);
  ws.hess = Mat(n, n);
  ws.hess_factor = Mat(n, n);
  std::size_t max_support = 1;
  for (const auto& c : prog.constraints) max_support = std::max(max_support, c->support().size());
  ws.grad_loc.assign(max_support, 0.0);
  ws.hess_loc = Mat(max_support, max_support);

  // Scaled start point.
  std::vector<double> y(n);
  for (int j = 0; j < n; ++j) y[j] = prog.start[j] / scale[j];

  if (!detail::eval_all(prog, y, scale, ws))
    throw std::invalid_argument("solve_barrier: start point is not strictly feasible");
  for (std::size_t r = 0; r < prog.eq_rows.size(); ++r) {
    double v = -prog.eq_rhs[r];
    for (auto [idx, coeff] : prog.eq_rows[r]) v += coeff * ws.x_phys[idx];
    if (std::abs(v) > 1e-7 * std::max(1.0, std::abs(prog.eq_rhs[r])))
      throw std::invalid_argument("solve_barrier: start violates equality row " +
                                  std::to_string(r) + " by " + std::to_string(v));
  }

  const std::size_t p = prog.eq_rows.size();

  SolveStatus st;
  st.x.assign(n, 0.0);

  const detail::BlockPlan block_plan = detail::make_block_plan(prog);

  // Initial t sized so m/t matches the objective scale; values below one
  // unit are treated as unit scale, which keeps the first stages in the
  // well-conditioned regime.
  double f0 = 0.0;
  for (int j = 0; j < n; ++j) f0 += prog.maximize[j] * prog.start[j];
  const double obj_scale = std::clamp(std::abs(f0), 1.0, 1e9);
  double t = static_cast<double>(std::max<std::size_t>(m, 1)) / obj_scale;

  const double kTolNewton = 1e-9;  // decrement^2 / 2 threshold
  const int kMaxNewtonPerStage = 80;
  const int kMaxNewtonTotal = 8000;

  auto finish = [&](SolveStatus::Term reason, const std::string& msg) {
    detail::to_physical(y, scale, ws.x_phys);
    st.x = ws.x_phys;
    st.objective = 0.0;
    for (int j = 0; j < n; ++j) st.objective += prog.maximize[j] * st.x[j];
    st.gap = static_cast<double>(m) / t;
    st.reason = reason;
    st.message = msg;
    return st;
  };

  while (true) {
    int stage_newton_count = 0;
    // Center at the current t.
    for (int stage_it = 0; stage_it < kMaxNewtonPerStage; ++stage_it) {
      if (st.newton_iters >= kMaxNewtonTotal) return finish(SolveStatus::Term::max_iter, "newton cap");
      detail::eval_all(prog, y, scale, ws);

      for (std::size_t ci = 0; ci < m; ++ci)
        if (ws.vals[ci] > -1e-300)
          return finish(SolveStatus::Term::numeric,
                        "slack underflow on constraint " + std::to_string(ci));

      // Gradient and Hessian of t*(-c^T x) + Phi in the scaled space.
      for (int j = 0; j < n; ++j) ws.grad[j] = -t * prog.maximize[j] * scale[j];
      ws.hess.set_zero();
      for (std::size_t ci = 0; ci < m; ++ci) {
        const ConstraintFn& con = *prog.constraints[ci];
        const auto& sup = con.support();
        const std::size_t ns = sup.size();
        const double v = ws.vals[ci];
        const double w1 = -1.0 / v;      // 1/(-g)
        const double w2 = w1 * w1;       // 1/g^2
        std::span<double> gl(ws.grad_loc.data(), ns);
        con.gradient(ws.x_phys, gl);
        for (std::size_t a = 0; a < ns; ++a) gl[a] *= scale[sup[a]];
        for (std::size_t a = 0; a < ns; ++a) ws.grad[sup[a]] += w1 * gl[a];
        for (std::size_t a = 0; a < ns; ++a) {
          const double ga = gl[a];
          const int ia = sup[a];
          for (std::size_t b = 0; b <= a; ++b) {
            const int ib = sup[b];
            const double upd = w2 * ga * gl[b];
            if (ia >= ib)
              ws.hess(ia, ib) += upd;
            else
              ws.hess(ib, ia) += upd;
          }
        }
        if (con.kind() == ConstraintKind::convex_smooth) {
          for (std::size_t a = 0; a < ns; ++a)
            for (std::size_t b = 0; b < ns; ++b) ws.hess_loc(a, b) = 0.0;
          con.hessian(ws.x_phys, ws.hess_loc);
          for (std::size_t a = 0; a < ns; ++a) {
            const int ia = sup[a];
            const double sa = scale[sup[a]];
            for (std::size_t b = 0; b <= a; ++b) {
              const int ib = sup[b];
              const double upd = w1 * ws.hess_loc(a, b) * sa * scale[sup[b]];
              if (upd == 0.0) continue;
              if (ia >= ib)
                ws.hess(ia, ib) += upd;
              else
                ws.hess(ib, ia) += upd;
            }
          }
        }
      }

      // Newton step via diagonally pivoted Cholesky: the barrier Hessian's
      // diagonal spans many orders of magnitude near the path, and pivoting
      // keeps each direction accurate at its own scale. An attempt is
      // accepted only if the entire solve chain (factor, solves, equality
      // Schur complement) stays finite.
      double max_diag = 0.0;
      for (int j = 0; j < n; ++j) max_diag = std::max(max_diag, std::abs(ws.hess(j, j)));
      bool solved = false;
      if (block_plan.valid) {
        for (double floor_rel = 1e-18; floor_rel <= 1e-5 && !solved; floor_rel *= 1e4) {
          std::vector<double> u;
          if (detail::block_solve(ws.hess, block_plan, std::max(1e-300, floor_rel * max_diag),
                                  ws.grad, u)) {
            for (int j = 0; j < n; ++j) ws.step[j] = -u[j];
            solved = true;
          }
        }
      }
      for (double floor_rel = 1e-18; floor_rel <= 1e-5 && !solved; floor_rel *= 1e4) {
        const double floor_val = std::max(1e-300, floor_rel * max_diag);
        ws.hess_factor = ws.hess;
        for (int j = 0; j < n; ++j) ws.hess_factor(j, j) += 1e-12;
        const bool factored = cholesky_pivoted(ws.hess_factor, ws.perm, floor_val);
        do {
          if (!factored) break;
          std::vector<double> u(ws.grad);
          cholesky_solve_pivoted(ws.hess_factor, ws.perm, u);
          bool finite = true;
          for (int j = 0; j < n; ++j) finite &= std::isfinite(u[j]);
          if (!finite) break;
          if (p == 0) {
            for (int j = 0; j < n; ++j) ws.step[j] = -u[j];
            solved = true;
            break;
          }
          Mat xcols(p, n);
          for (std::size_t r = 0; r < p && finite; ++r) {
            std::vector<double> col(n, 0.0);
            for (auto [idx, coeff] : prog.eq_rows[r]) col[idx] = coeff * scale[idx];
            cholesky_solve_pivoted(ws.hess_factor, ws.perm, col);
            for (int j = 0; j < n; ++j) {
              finite &= std::isfinite(col[j]);
              xcols(r, j) = col[j];
            }
          }
          if (!finite) break;
          Mat s_mat(p, p);
          for (std::size_t r = 0; r < p; ++r)
            for (std::size_t c2 = 0; c2 <= r; ++c2) {
              double acc = 0.0;
              for (auto [idx, coeff] : prog.eq_rows[c2]) acc += coeff * scale[idx] * xcols(r, idx);
              s_mat(r, c2) = acc;
              s_mat(c2, r) = acc;
            }
          double s_diag = 0.0;
          for (std::size_t r = 0; r < p; ++r) s_diag = std::max(s_diag, std::abs(s_mat(r, r)));
          if (!(s_diag > 0.0) || !std::isfinite(s_diag)) break;
          {
            Mat s_try = s_mat;
            if (cholesky_inplace(s_try)) {
              s_mat = std::move(s_try);
            } else if (!cholesky_inplace_clamped(s_mat, 1e-13 * s_diag)) {
              break;
            }
          }
          // Feasibility-restoring step: E d = (b - E y) absorbs any drift
          // off the equality manifold from earlier regularized solves.
          std::vector<double> w(p);
          for (std::size_t r = 0; r < p; ++r) {
            double acc = 0.0;
            for (auto [idx, coeff] : prog.eq_rows[r]) acc += coeff * scale[idx] * u[idx];
            double resid = prog.eq_rhs[r];
            for (auto [idx, coeff] : prog.eq_rows[r]) resid -= coeff * ws.x_phys[idx];
            w[r] = -acc - resid;
          }
          cholesky_solve(s_mat, w);
          for (std::size_t r = 0; r < p; ++r) finite &= std::isfinite(w[r]);
          if (!finite) break;
          for (int j = 0; j < n; ++j) {
            double corr = 0.0;
            for (std::size_t r = 0; r < p; ++r) corr += xcols(r, j) * w[r];
            ws.step[j] = -u[j] - corr;
            finite &= std::isfinite(ws.step[j]);
          }
          solved = finite;
        } while (false);
        floor_rel = floor_rel == 0.0 ? 1e-14 : floor_rel * 10.0;
      }
      if (!solved) return finish(SolveStatus::Term::numeric, "newton system solve failed");

      double dec = 0.0;
      for (int j = 0; j < n; ++j) dec -= ws.grad[j] * ws.step[j];
      if (!(dec > 2.0 * kTolNewton)) break;  // centered

      // Backtracking line search: stay strictly feasible, then Armijo.
      const double phi0 = detail::merit(prog, y, scale, t, ws);
      const double slope = -dec;
      double sigma = 1.0;
      std::vector<double> y_try(n);
      bool accepted = false;
      for (int ls = 0; ls < 200; ++ls) {
        for (int j = 0; j < n; ++j) y_try[j] = y[j] + sigma * ws.step[j];
        if (detail::eval_all(prog, y_try, scale, ws)) {
          const double phi1 = detail::merit(prog, y_try, scale, t, ws);
          if (phi1 <= phi0 + 0.3 * sigma * slope) {
            accepted = true;
            break;
          }
        }
        sigma *= 0.8;
        if (sigma < 1e-16) break;
      }
      if (!accepted) {
        // A stalled search near the end of a stage is benign: the iterate is
        // essentially centered for this t, so move on to the next stage.
        detail::eval_all(prog, y, scale, ws);  // restore cached values at y
        break;
      }
#ifdef WPCN_SOLVER_TRACE
      std::fprintf(stderr, "t=%.2e it=%d dec=%.3e sigma=%.3e\n", t, stage_it, dec, sigma);
#endif
      y.swap(y_try);
      ++st.newton_iters;
      ++stage_newton_count;
    }

    {
      detail::to_physical(y, scale, ws.x_phys);
      double obj = 0.0;
      for (int j = 0; j < n; ++j) obj += prog.maximize[j] * ws.x_phys[j];
      st.stage_objectives.push_back(obj);
      st.stage_newtons.push_back(stage_newton_count);
    }
    if (static_cast<double>(m) / t <= tol) return finish(SolveStatus::Term::optimal, "");
    t *= 10.0;
  }
}

// LP entry point: maximize c^T x subject to a_ub x <= b_ub and a_eq x = b_eq.
// The feasible region must be bounded (box constraints included in a_ub). A
// phase-I pass locates a strictly feasible start or reports infeasibility.
inline SolveStatus solve_lp(const std::vector<double>& maximize, const Mat& a_ub,
                            const std::vector<double>& b_ub, const Mat& a_eq = Mat(),
                            const std::vector<double>& b_eq = {}) {
  const int n = static_cast<int>(maximize.size());
  const std::size_t m = a_ub.rows();
  if (a_ub.cols() != static_cast<std::size_t>(n) || b_ub.size() != m)
    throw std::invalid_argument("solve_lp: inequality shape mismatch");
  const std::size_t peq = a_eq.rows();
  if (peq > 0 && (a_eq.cols() != static_cast<std::size_t>(n) || b_eq.size() != peq))
    throw std::invalid_argument("solve_lp: equality shape mismatch");

  // Particular solution of the equality system (min-norm via normal equations).
  std::vector<double> x0(n, 0.0);
  if (peq > 0) {
    Mat gram(peq, peq);
    for (std::size_t r = 0; r < peq; ++r)
      for (std::size_t c = 0; c <= r; ++c) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += a_eq(r, j) * a_eq(c, j);
        gram(r, c) = acc;
        gram(c, r) = acc;
      }
    std::vector<double> w;
    if (!solve_linear(gram, b_eq, w)) {
      SolveStatus st;
      st.reason = SolveStatus::Term::numeric;
      st.message = "equality rows are rank deficient";
      return st;
    }
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < peq; ++r) acc += a_eq(r, j) * w[r];
      x0[j] = acc;
    }
  }

  auto add_rows = [&](SmoothProgram& prog, bool with_slack) {
    for (std::size_t r = 0; r < m; ++r) {
      std::vector<int> sup;
      std::vector<double> coef;
      for (int j = 0; j < n; ++j)
        if (a_ub(r, j) != 0.0) {
          sup.push_back(j);
          coef.push_back(a_ub(r, j));
        }
      if (with_slack) {
        sup.push_back(n);
        coef.push_back(-1.0);
      }
      if (sup.empty()) {
        if (-b_ub[r] >= 0.0) throw std::invalid_argument("solve_lp: trivially infeasible row");
        continue;
      }
      prog.constraints.push_back(
          std::make_unique<AffineConstraint>(std::move(sup), std::move(coef), -b_ub[r]));
    }
    for (std::size_t r = 0; r < peq; ++r) {
      std::vector<std::pair<int, double>> row;
      for (int j = 0; j < n; ++j)
        if (a_eq(r, j) != 0.0) row.emplace_back(j, a_eq(r, j));
      prog.eq_rows.push_back(std::move(row));
      prog.eq_rhs.push_back(b_eq[r]);
    }
  };

  // Phase I: minimize the worst violation s.
  double s0 = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    double v = -b_ub[r];
    for (int j = 0; j < n; ++j) v += a_ub(r, j) * x0[j];
    s0 = std::max(s0, v);
  }
  s0 += 1.0;

  std::vector<double> x_start = x0;
  {
    SmoothProgram ph1;
    ph1.num_vars = n + 1;
    ph1.maximize.assign(n + 1, 0.0);
    ph1.maximize[n] = -1.0;
    add_rows(ph1, true);
    ph1.constraints.push_back(upper_bound(n, s0 + 1.0));
    ph1.constraints.push_back(lower_bound(n, -2.0));
    ph1.start = x0;
    ph1.start.push_back(s0);
    SolveStatus st1 = solve_barrier(ph1, 1e-6);
    if (st1.reason != SolveStatus::Term::optimal && st1.reason != SolveStatus::Term::max_iter)
      return st1;
    if (st1.x[n] >= -1e-9) {
      st1.reason = SolveStatus::Term::infeasible;
      st1.message = "phase-I optimum is non-negative";
      return st1;
    }
    x_start.assign(st1.x.begin(), st1.x.begin() + n);
  }

  SmoothProgram ph2;
  ph2.num_vars = n;
  ph2.maximize = maximize;
  add_rows(ph2, false);
  ph2.start = x_start;
  return solve_barrier(ph2, 1e-9);
}

}  // namespace wpcn::solver
