#pragma once

// Planning algorithms: circular trajectory initialization, the CCCP step
// over the convex surrogate subproblem, the time-allocation LP, and the
// alternating loop that ties them together for both the integrated (single
// hybrid UAV) and separated (energy UAV + info UAV) systems.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wpcn/convex_solver.hpp"
#include "wpcn/feasibility.hpp"
#include "wpcn/model.hpp"
#include "wpcn/types.hpp"

namespace wpcn::planner {

enum class SystemMode { integrated, separated };

struct PlannerConfig {
  double cccp_tol = 1e-4;        // stop CCCP when the objective delta drops below this
  int cccp_max_iter = 30;
  double outer_tol = 1e-4;       // stop alternating when the LP value delta drops below this
  int outer_max_iter = 20;
  double barrier_tol = 1e-8;     // duality-gap target of the barrier solves
  double interior_z_slack = 1e-6;  // relative inflation of z when building interior starts
  double rmin_start_slack = 1e-9;  // backoff of the R_min start value
  double radius_shrink = 1e-3;     // shrink of the circular initialization radius

  void validate() const {
    if (!(cccp_tol > 0 && outer_tol > 0 && barrier_tol > 0 && interior_z_slack > 0 &&
          rmin_start_slack > 0 && radius_shrink > 0 && radius_shrink < 1))
      throw std::invalid_argument("PlannerConfig: tolerances must be positive");
    if (cccp_max_iter < 1 || outer_max_iter < 1)
      throw std::invalid_argument("PlannerConfig: iteration caps must be >= 1");
  }
};

// Iterate of the joint trajectory/power subproblem. trajectories and z are
// index-aligned; integrated mode carries one entry (hybrid role), separated
// two (info first, energy second). z always equals the squared distances of
// its trajectory on return (the linearization point of the next step).
struct SubproblemSolution {
  std::vector<Trajectory> trajectories;
  std::vector<Mat> z;  // each N x K, squared distances (m^2)
  PowerSchedule powers;
  double r_min = 0.0;
};

inline Vec2 centroid(const std::vector<Vec2>& pts) {
  Vec2 c;
  for (const auto& p : pts) c = c + p;
  return c * (1.0 / static_cast<double>(pts.size()));
}

// Circular initialization: center at the GT centroid, radius the smaller of
// the mean center-GT distance and the largest radius the speed budget allows
// for one revolution, shrunk slightly to keep the speed constraints strictly
// slack for the barrier method.
inline Trajectory circular_init(const Scenario& sc, double v, double phase,
                                Role role = Role::hybrid, double radius_shrink = 1e-3) {
  sc.validate();
  const Vec2 c = centroid(sc.gts);
  double r_md = 0.0;
  for (const auto& u : sc.gts) r_md += dist(c, u);
  r_md /= static_cast<double>(sc.gts.size());
  const double r_max = v * sc.horizon_s / (2.0 * std::numbers::pi);
  const double r = std::min(r_md, r_max) * (1.0 - radius_shrink);

  Trajectory t;
  t.role = role;
  t.pts.resize(static_cast<std::size_t>(sc.slots));
  for (int n = 1; n <= sc.slots; ++n) {
    const double ang = 2.0 * std::numbers::pi * static_cast<double>(n) / sc.slots + phase;
    t.pts[n - 1] = {c.x + r * std::cos(ang), c.y + r * std::sin(ang)};
  }
  return t;
}

inline Mat squared_distances(const Trajectory& traj, const Scenario& sc) {
  Mat z(traj.slots(), sc.num_gts());
  for (std::size_t n = 0; n < traj.slots(); ++n)
    for (std::size_t k = 0; k < sc.num_gts(); ++k) z(n, k) = dist2(traj.pts[n], sc.gts[k]);
  return z;
}

// Exact minimum average throughput of an iterate under a fixed allocation;
// the value every trace entry reports.
inline double min_throughput(const Scenario& sc, const TimeAllocation& alloc,
                             const std::vector<Trajectory>& trajs, const PowerSchedule& powers) {
  const Trajectory& info = trajs.front();
  double mn = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < sc.num_gts(); ++k)
    mn = std::min(mn, model::average_rate(k, info, alloc, powers, sc));
  return mn;
}

struct CccpOptions {
  bool freeze_positions = false;       // pin all trajectories (circular/static baselines)
  const Mat* fixed_powers = nullptr;   // N x K; powers become constants (NPC)
  double fixed_power_backoff = 1e-4;   // relative shave on fixed powers for interiority
  // Previous-slot-only causality (what the NPC rule enforces) instead of the
  // cumulative energy constraint; a valid restriction of the latter.
  bool slot_local_energy = false;
};

struct StepResult {
  SubproblemSolution sol;
  solver::SolveStatus status;
  bool ok = false;
  std::string error;
};

namespace detail {

struct BuildError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Variable layout of one surrogate subproblem.
struct RoleBlock {
  Role role = Role::hybrid;
  bool frozen = false;
  int pos_base = -1;  // first index of the 2N position coordinates
  int z_base = -1;    // first index of the N*K distance proxies
  const Trajectory* prev_traj = nullptr;
  const Mat* z_hat = nullptr;  // linearization point, N x K
};

struct Built {
  solver::SmoothProgram prog;
  int rmin_index = 0;
  int power_base = -1;  // -1 when powers are fixed
  std::vector<RoleBlock> blocks;
  const Mat* fixed_powers = nullptr;
  double power_shave = 0.0;
};

inline int power_index(const Built& b, int n, int k, int num_gts) {
  return b.power_base + (n - 2) * num_gts + k;
}
inline int pos_index(const RoleBlock& blk, int n, int dim) { return blk.pos_base + (n - 1) * 2 + dim; }
inline int z_index(const RoleBlock& blk, int n, int k, int num_gts) {
  return blk.z_base + (n - 1) * num_gts + k;
}

// Assembles the convex surrogate program around `prev` (linearized at the
// squared distances of prev's trajectories) and constructs a strictly
// feasible start from the same iterate.
inline Built build_subproblem(const Scenario& sc, const TimeAllocation& alloc,
                              const SubproblemSolution& prev, SystemMode mode,
                              const PlannerConfig& cfg, const CccpOptions& opts) {
  const int n_slots = sc.slots;
  const int num_gts = static_cast<int>(sc.num_gts());
  const double inv_n = 1.0 / static_cast<double>(n_slots);
  const double snr_c = sc.snr_coeff();

  Built b;
  b.fixed_powers = opts.fixed_powers;
  b.power_shave = opts.fixed_powers ? opts.fixed_power_backoff : 0.0;

  const std::size_t num_roles = mode == SystemMode::separated ? 2 : 1;
  if (prev.trajectories.size() != num_roles || prev.z.size() != num_roles)
    throw std::invalid_argument("cccp_step: iterate does not match the system mode");

  b.blocks.resize(num_roles);
  for (std::size_t r = 0; r < num_roles; ++r) {
    RoleBlock& blk = b.blocks[r];
    blk.role = prev.trajectories[r].role;
    blk.prev_traj = &prev.trajectories[r];
    blk.z_hat = &prev.z[r];
    blk.frozen = opts.freeze_positions || sc.vmax(blk.role) <= 0.0;
  }
  const RoleBlock& info_blk = b.blocks.front();
  const RoleBlock& energy_blk = b.blocks.back();

  // Variable layout.
  int next = 1;  // 0 is R_min
  if (!opts.fixed_powers) {
    b.power_base = next;
    next += (n_slots - 1) * num_gts;
  }
  for (auto& blk : b.blocks) {
    if (blk.frozen) continue;
    blk.pos_base = next;
    next += 2 * n_slots;
    blk.z_base = next;
    next += n_slots * num_gts;
  }
  auto& prog = b.prog;
  prog.num_vars = next;
  prog.maximize.assign(next, 0.0);
  prog.maximize[0] = 1.0;

  // Arrow structure: per-GT variables form groups, R_min and the positions
  // are shared. Every constraint touches at most one GT's variables.
  prog.var_block.assign(next, -1);
  if (b.power_base >= 0)
    for (int n = 2; n <= n_slots; ++n)
      for (int k = 0; k < num_gts; ++k) prog.var_block[power_index(b, n, k, num_gts)] = k;
  for (const auto& blk : b.blocks) {
    if (blk.frozen) continue;
    for (int n = 1; n <= n_slots; ++n)
      for (int k = 0; k < num_gts; ++k) prog.var_block[z_index(blk, n, k, num_gts)] = k;
  }

  // Geometry caps: a box around the GTs wide enough to contain any useful
  // trajectory, plus derived caps for z and R_min.
  double min_x = sc.gts[0].x, max_x = sc.gts[0].x, min_y = sc.gts[0].y, max_y = sc.gts[0].y;
  for (const auto& u : sc.gts) {
    min_x = std::min(min_x, u.x);
    max_x = std::max(max_x, u.x);
    min_y = std::min(min_y, u.y);
    max_y = std::max(max_y, u.y);
  }
  const Vec2 cen = centroid(sc.gts);
  double scene_r = 0.0;
  for (const auto& u : sc.gts) scene_r = std::max(scene_r, dist(cen, u));
  const double v_top = std::max({sc.vmax_hybrid_mps, sc.vmax_info_mps, sc.vmax_energy_mps});
  const double margin = scene_r + v_top * sc.horizon_s / (2.0 * std::numbers::pi) + 10.0;
  const double box_lo_x = min_x - margin, box_hi_x = max_x + margin;
  const double box_lo_y = min_y - margin, box_hi_y = max_y + margin;

  double corner_d2 = 0.0;
  for (const auto& u : sc.gts)
    for (double cx : {box_lo_x, box_hi_x})
      for (double cy : {box_lo_y, box_hi_y}) corner_d2 = std::max(corner_d2, dist2({cx, cy}, u));
  const double h_min = std::min({sc.alt_hybrid_m, sc.alt_info_m, sc.alt_energy_m});
  const double z_cap = 4.0 * corner_d2 + 4.0 * h_min * h_min + 100.0;
  const double rate_cap = std::log2(1.0 + snr_c * sc.p_ul_max_w / (h_min * h_min)) + 1.0;

  // Variable scaling to unit-order magnitudes.
  const double len_scale = std::max({10.0, box_hi_x - box_lo_x, box_hi_y - box_lo_y});
  prog.var_scale.assign(next, 1.0);
  if (b.power_base >= 0)
    for (int i = b.power_base; i < b.power_base + (n_slots - 1) * num_gts; ++i)
      prog.var_scale[i] = sc.p_ul_max_w;
  for (const auto& blk : b.blocks) {
    if (blk.frozen) continue;
    for (int i = blk.pos_base; i < blk.pos_base + 2 * n_slots; ++i) prog.var_scale[i] = len_scale;
    for (int i = blk.z_base; i < blk.z_base + n_slots * num_gts; ++i)
      prog.var_scale[i] = len_scale * len_scale;
  }

  auto fixed_power = [&](int n, int k) {
    return (*opts.fixed_powers)(n - 1, k) * (1.0 - b.power_shave);
  };

  // Throughput constraints: R_min <= (1/N) sum_n tau_k[n] * rate_lower(...).
  const double h_info = sc.altitude(info_blk.role);
  std::vector<const solver::MinRateConstraint*> rate_cons;
  for (int k = 0; k < num_gts; ++k) {
    std::vector<solver::RateTerm> terms;
    for (int n = 2; n <= n_slots; ++n) {
      const double w = alloc.tau(n - 1, k + 1) * inv_n;
      if (w == 0.0) continue;
      solver::RateTerm t;
      t.weight = w;
      t.z_hat = (*info_blk.z_hat)(n - 1, k);
      if (info_blk.frozen) {
        t.z_fix = dist2(info_blk.prev_traj->pts[n - 1], sc.gts[k]);
        t.z_hat = t.z_fix;  // exact rate in the frozen-geometry case
      } else {
        t.z_index = z_index(info_blk, n, k, num_gts);
      }
      if (opts.fixed_powers) {
        t.p_fix = fixed_power(n, k);
        if (t.p_fix <= 0.0) continue;  // exact contribution is zero
      } else {
        t.p_index = power_index(b, n, k, num_gts);
      }
      terms.push_back(t);
    }
    auto con = std::make_unique<solver::MinRateConstraint>(0, h_info, snr_c, std::move(terms));
    rate_cons.push_back(con.get());
    prog.constraints.push_back(std::move(con));
  }

  // Energy causality on the surrogate: cumulative tau*P minus the summed
  // energy_lower terms (delta cancels from both sides).
  const double h_energy = sc.altitude(energy_blk.role);
  const double h_energy2 = h_energy * h_energy;
  const double wet_coeff = sc.zeta * sc.g0 * sc.p_dl_w;
  // Consumption prefix / harvest prefix bookkeeping reused for the start point.
  std::vector<std::vector<double>> harvest_const(num_gts), harvest_zcoef(num_gts);
  for (int k = 0; k < num_gts; ++k) {
    harvest_const[k].assign(n_slots + 1, 0.0);
    harvest_zcoef[k].assign(n_slots + 1, 0.0);
    for (int i = 1; i <= n_slots; ++i) {
      const double tau0 = alloc.tau(i - 1, 0);
      double cst = 0.0, zc = 0.0;
      if (tau0 > 0.0) {
        if (energy_blk.frozen) {
          cst = tau0 * wet_coeff / (dist2(energy_blk.prev_traj->pts[i - 1], sc.gts[k]) + h_energy2);
        } else {
          const double wh = (*energy_blk.z_hat)(i - 1, k) + h_energy2;
          const double kappa = tau0 * wet_coeff / wh;
          cst = kappa * (2.0 - h_energy2 / wh);
          zc = kappa / wh;  // enters the constraint with +zc * z
        }
      }
      harvest_const[k][i] = cst;
      harvest_zcoef[k][i] = zc;
    }
    for (int n = 2; n <= n_slots; ++n) {
      std::vector<int> sup;
      std::vector<double> coef;
      double offset = 0.0;
      const int spend_from = opts.slot_local_energy ? n : 2;
      const int harvest_from = opts.slot_local_energy ? n - 1 : 1;
      for (int i = spend_from; i <= n; ++i) {
        const double tau = alloc.tau(i - 1, k + 1);
        if (tau == 0.0) continue;
        if (opts.fixed_powers) {
          offset += tau * fixed_power(i, k);
        } else {
          sup.push_back(power_index(b, i, k, num_gts));
          coef.push_back(tau);
        }
      }
      for (int i = harvest_from; i <= n - 1; ++i) {
        offset -= harvest_const[k][i];
        if (harvest_zcoef[k][i] != 0.0) {
          sup.push_back(z_index(energy_blk, i, k, num_gts));
          coef.push_back(harvest_zcoef[k][i]);
        }
      }
      if (sup.empty()) {
        if (offset > 0.0)
          throw BuildError("energy constraint infeasible with all terms constant");
        continue;
      }
      prog.constraints.push_back(
          std::make_unique<solver::AffineConstraint>(std::move(sup), std::move(coef), offset));
    }
  }

  // Geometry: auxiliary distance ties, speed, periodicity and position boxes.
  for (const auto& blk : b.blocks) {
    if (blk.frozen) continue;
    for (int n = 1; n <= n_slots; ++n)
      for (int k = 0; k < num_gts; ++k)
        prog.constraints.push_back(std::make_unique<solver::AuxDistanceConstraint>(
            pos_index(blk, n, 0), pos_index(blk, n, 1), z_index(blk, n, k, num_gts), sc.gts[k]));
    const double step_cap = sc.slot_len_s() * sc.vmax(blk.role);
    const double rhs = step_cap * step_cap;
    for (int n = 2; n <= n_slots; ++n)
      prog.constraints.push_back(std::make_unique<solver::MoveConstraint>(
          pos_index(blk, n, 0), pos_index(blk, n, 1), pos_index(blk, n - 1, 0),
          pos_index(blk, n - 1, 1), rhs));
    prog.constraints.push_back(std::make_unique<solver::MoveConstraint>(
        pos_index(blk, n_slots, 0), pos_index(blk, n_slots, 1), pos_index(blk, 1, 0),
        pos_index(blk, 1, 1), rhs));
    for (int n = 1; n <= n_slots; ++n) {
      prog.constraints.push_back(solver::lower_bound(pos_index(blk, n, 0), box_lo_x));
      prog.constraints.push_back(solver::upper_bound(pos_index(blk, n, 0), box_hi_x));
      prog.constraints.push_back(solver::lower_bound(pos_index(blk, n, 1), box_lo_y));
      prog.constraints.push_back(solver::upper_bound(pos_index(blk, n, 1), box_hi_y));
    }
    for (int n = 1; n <= n_slots; ++n)
      for (int k = 0; k < num_gts; ++k)
        prog.constraints.push_back(solver::upper_bound(z_index(blk, n, k, num_gts), z_cap));
  }
  if (b.power_base >= 0)
    for (int n = 2; n <= n_slots; ++n)
      for (int k = 0; k < num_gts; ++k) {
        prog.constraints.push_back(solver::lower_bound(power_index(b, n, k, num_gts), 0.0));
        prog.constraints.push_back(solver::upper_bound(power_index(b, n, k, num_gts), sc.p_ul_max_w));
      }

  // Strictly feasible start from the previous iterate. Positions contract
  // toward their own centroid if a speed constraint is tight; z inflates
  // relative to the exact squared distances; powers rescale per GT until the
  // energy rows are strictly slack; R_min backs off below the surrogate
  // throughput at the start.
  std::vector<std::vector<Vec2>> start_pts(num_roles);
  for (std::size_t r = 0; r < num_roles; ++r) {
    start_pts[r] = prev.trajectories[r].pts;
    const auto& blk = b.blocks[r];
    if (blk.frozen) continue;
    const double step_cap = sc.slot_len_s() * sc.vmax(blk.role);
    const double rhs = step_cap * step_cap;
    for (int tries = 0; tries < 60; ++tries) {
      double worst = 0.0;
      for (int n = 2; n <= n_slots + 1; ++n) {
        const Vec2& a = start_pts[r][(n <= n_slots ? n : 1) - 1];
        const Vec2& bb = start_pts[r][n - 2];
        worst = std::max(worst, dist2(a, bb));
      }
      if (worst < rhs * (1.0 - 1e-9)) break;
      const Vec2 tc = centroid(start_pts[r]);
      for (auto& p : start_pts[r]) p = tc + (p - tc) * (1.0 - 1e-6);
    }
  }

  double z_slack = cfg.interior_z_slack;
  std::string last_bad;
  for (int attempt = 0; attempt < 7; ++attempt) {
    std::vector<double> x(next, 0.0);
    for (std::size_t r = 0; r < num_roles; ++r) {
      const auto& blk = b.blocks[r];
      if (blk.frozen) continue;
      for (int n = 1; n <= n_slots; ++n) {
        x[pos_index(blk, n, 0)] = start_pts[r][n - 1].x;
        x[pos_index(blk, n, 1)] = start_pts[r][n - 1].y;
        for (int k = 0; k < num_gts; ++k) {
          const double d2 = dist2(start_pts[r][n - 1], sc.gts[k]);
          const double base = std::max((*blk.z_hat)(n - 1, k), d2);
          x[z_index(blk, n, k, num_gts)] = base * (1.0 + z_slack) + z_slack;
        }
      }
    }
    if (b.power_base >= 0) {
      for (int k = 0; k < num_gts; ++k) {
        std::vector<double> cand(n_slots + 1, 0.0);
        double max_prev = 0.0;
        for (int n = 2; n <= n_slots; ++n) max_prev = std::max(max_prev, prev.powers.at(n, k));
        for (int n = 2; n <= n_slots; ++n) {
          double p = prev.powers.at(n, k);
          if (max_prev <= 0.0) p = 0.5 * sc.p_ul_max_w;  // fresh start, scaled down below
          // Generous floors keep the box-barrier weights at the start within
          // the range dense Cholesky handles.
          cand[n] = std::clamp(p, sc.p_ul_max_w * 1e-6, sc.p_ul_max_w * (1.0 - 1e-6));
        }
        // Harvest at the start z values, then the per-GT feasibility scale.
        double alpha = 1.0;
        double consumed = 0.0, harvest = 0.0;
        for (int n = 2; n <= n_slots; ++n) {
          const int i = n - 1;
          if (energy_blk.frozen) {
            harvest += harvest_const[k][i];
          } else {
            const double z_i = x[z_index(energy_blk, i, k, num_gts)];
            harvest += harvest_const[k][i] - harvest_zcoef[k][i] * z_i;
          }
          consumed += alloc.tau(n - 1, k + 1) * cand[n];
          if (consumed > 0.0) alpha = std::min(alpha, 0.999 * harvest / consumed);
        }
        if (!(alpha > 0.0)) throw BuildError("no harvest available for a transmitting GT");
        for (int n = 2; n <= n_slots; ++n)
          x[power_index(b, n, k, num_gts)] =
              std::max(cand[n] * std::min(alpha, 1.0), sc.p_ul_max_w * 1e-8);
      }
    }
    x[0] = 0.0;
    double min_tput = std::numeric_limits<double>::infinity();
    for (const auto* rc : rate_cons) min_tput = std::min(min_tput, -rc->value(x));
    x[0] = min_tput - std::max(cfg.rmin_start_slack, 1e-4 * (1.0 + std::abs(min_tput)));

    // R_min box sized after the start so the box can never pinch it.
    const double rmin_lo = std::min(-1.0, x[0] - 0.5);

    bool strict = true;
    for (std::size_t ci = 0; ci < prog.constraints.size(); ++ci) {
      const double v = prog.constraints[ci]->value(x);
      if (!(v < 0.0)) {
        strict = false;
        last_bad = "constraint " + std::to_string(ci) + " of " +
                   std::to_string(prog.constraints.size()) + " at " + std::to_string(v);
        break;
      }
    }
    if (strict && x[0] > rmin_lo && x[0] < rate_cap) {
      prog.constraints.push_back(solver::lower_bound(0, rmin_lo));
      prog.constraints.push_back(solver::upper_bound(0, rate_cap));
      prog.start = std::move(x);
      b.rmin_index = 0;
      return b;
    }
    z_slack *= 10.0;
  }
  throw BuildError("could not construct a strictly interior start point (" + last_bad + ")");
}

inline SubproblemSolution extract(const Built& b, const Scenario& sc,
                                  const solver::SolveStatus& st) {
  const int n_slots = sc.slots;
  const int num_gts = static_cast<int>(sc.num_gts());
  SubproblemSolution out;
  out.r_min = st.x[b.rmin_index];
  out.trajectories.resize(b.blocks.size());
  out.z.resize(b.blocks.size());
  for (std::size_t r = 0; r < b.blocks.size(); ++r) {
    const auto& blk = b.blocks[r];
    Trajectory t;
    t.role = blk.role;
    if (blk.frozen) {
      t.pts = blk.prev_traj->pts;
    } else {
      t.pts.resize(n_slots);
      for (int n = 1; n <= n_slots; ++n)
        t.pts[n - 1] = {st.x[pos_index(blk, n, 0)], st.x[pos_index(blk, n, 1)]};
    }
    // Tighten the distance proxies onto the trajectory: the exact rates and
    // harvests at these positions dominate the surrogate values, so the next
    // linearization point starts from the geometry itself.
    out.z[r] = squared_distances(t, sc);
    out.trajectories[r] = std::move(t);
  }
  out.powers = PowerSchedule::zeros(n_slots, num_gts);
  if (b.fixed_powers) {
    out.powers.p_ul = *b.fixed_powers;
  } else {
    for (int n = 2; n <= n_slots; ++n)
      for (int k = 0; k < num_gts; ++k)
        out.powers.p_ul(n - 1, k) = std::max(0.0, st.x[power_index(b, n, k, num_gts)]);
  }
  return out;
}

}  // namespace detail

// One CCCP iteration: linearize the surrogate bounds at the squared
// distances of `prev`, solve the resulting convex program, and return the
// new iterate. The objective never drops below prev's by more than the
// barrier gap.
inline StepResult cccp_step(const Scenario& sc, const TimeAllocation& alloc,
                            const SubproblemSolution& prev, SystemMode mode,
                            const PlannerConfig& cfg = {}, const CccpOptions& opts = {}) {
  sc.validate();
  cfg.validate();
  StepResult res;
  CccpOptions local = opts;
  for (int attempt = 0; attempt < 3; ++attempt) {
    try {
      detail::Built built = detail::build_subproblem(sc, alloc, prev, mode, cfg, local);
      res.status = solver::solve_barrier(built.prog, cfg.barrier_tol / 2.0);
      if (res.status.reason != solver::SolveStatus::Term::optimal) {
        res.sol = detail::extract(built, sc, res.status);
        res.error = "barrier solve failed: " + res.status.message;
        return res;
      }
      res.sol = detail::extract(built, sc, res.status);
      res.sol.r_min = min_throughput(sc, alloc, res.sol.trajectories, res.sol.powers);
      // Monotone safeguard: the previous iterate stays feasible for the new
      // surrogate, so a step may never report a worse objective.
      const double prev_value = min_throughput(sc, alloc, prev.trajectories, prev.powers);
      if (res.sol.r_min < prev_value) {
        res.sol.trajectories = prev.trajectories;
        res.sol.powers = prev.powers;
        res.sol.z.clear();
        for (const auto& t : res.sol.trajectories) res.sol.z.push_back(squared_distances(t, sc));
        res.sol.r_min = prev_value;
      }
      res.ok = true;
      return res;
    } catch (const detail::BuildError& e) {
      if (opts.fixed_powers && local.fixed_power_backoff < 1e-2) {
        local.fixed_power_backoff *= 10.0;  // NPC powers sit on the causality boundary
        continue;
      }
      res.error = e.what();
      return res;
    }
  }
  res.error = "could not build an interior subproblem start";
  return res;
}

struct AllocationResult {
  TimeAllocation alloc;
  double r_min = 0.0;
  solver::SolveStatus status;
  bool ok = false;
  std::string error;
};

// Time-allocation LP: maximize R_min over the TDMA fractions for fixed
// trajectories and powers. Always feasible (all-WET allocation with
// R_min = 0 satisfies every row), so failures are internal errors.
inline AllocationResult time_allocation(const Scenario& sc, const std::vector<Trajectory>& trajs,
                                        const PowerSchedule& powers, const PlannerConfig& cfg = {},
                                        const TimeAllocation* warm = nullptr,
                                        bool slot_local_energy = false) {
  sc.validate();
  cfg.validate();
  const int n_slots = sc.slots;
  const int num_gts = static_cast<int>(sc.num_gts());
  if (trajs.empty() || trajs.size() > 2)
    throw std::invalid_argument("time_allocation: expected 1 or 2 trajectories");
  for (const auto& t : trajs)
    if (t.slots() != static_cast<std::size_t>(n_slots))
      throw std::invalid_argument("time_allocation: trajectory slot mismatch");
  const Trajectory& traj_info = trajs.front();
  const Trajectory& traj_energy = trajs.back();

  const double inv_n = 1.0 / static_cast<double>(n_slots);
  const double h_i = sc.altitude(traj_info.role);
  const double h_e = sc.altitude(traj_energy.role);

  // Rate and harvest coefficients at the fixed geometry.
  Mat a_rate(n_slots, num_gts);  // bits/s/Hz
  Mat b_harv(n_slots, num_gts);  // W
  for (int n = 1; n <= n_slots; ++n)
    for (int k = 0; k < num_gts; ++k) {
      const double gain_i = model::channel_gain(traj_info.pts[n - 1], sc.gts[k], h_i, sc.g0);
      a_rate(n - 1, k) =
          n == 1 ? 0.0
                 : model::instantaneous_rate(powers.at(n, k), gain_i, sc.eta, sc.noise_w);
      b_harv(n - 1, k) =
          sc.zeta * sc.p_dl_w * model::channel_gain(traj_energy.pts[n - 1], sc.gts[k], h_e, sc.g0);
    }

  auto tau_index = [&](int n, int k) { return 1 + (n - 1) * (num_gts + 1) + k; };
  const int nv = 1 + n_slots * (num_gts + 1);

  solver::SmoothProgram prog;
  prog.num_vars = nv;
  prog.maximize.assign(nv, 0.0);
  prog.maximize[0] = 1.0;

  double rate_top = 0.0;
  for (int k = 0; k < num_gts; ++k) {
    std::vector<int> sup{0};
    std::vector<double> coef{1.0};
    double best = 0.0;
    for (int n = 2; n <= n_slots; ++n) {
      const double a = a_rate(n - 1, k);
      if (a == 0.0) continue;
      sup.push_back(tau_index(n, k + 1));
      coef.push_back(-a * inv_n);
      best += a * inv_n;
    }
    rate_top = std::max(rate_top, best);
    prog.constraints.push_back(
        std::make_unique<solver::AffineConstraint>(std::move(sup), std::move(coef), 0.0));
  }
  for (int k = 0; k < num_gts; ++k)
    for (int n = 2; n <= n_slots; ++n) {
      std::vector<int> sup;
      std::vector<double> coef;
      const int spend_from = slot_local_energy ? n : 2;
      const int harvest_from = slot_local_energy ? n - 1 : 1;
      for (int i = spend_from; i <= n; ++i)
        if (powers.at(i, k) > 0.0) {
          sup.push_back(tau_index(i, k + 1));
          coef.push_back(powers.at(i, k));
        }
      for (int i = harvest_from; i <= n - 1; ++i) {
        sup.push_back(tau_index(i, 0));
        coef.push_back(-b_harv(i - 1, k));
      }
      prog.constraints.push_back(
          std::make_unique<solver::AffineConstraint>(std::move(sup), std::move(coef), 0.0));
    }
  for (int n = 1; n <= n_slots; ++n)
    for (int k = 0; k <= num_gts; ++k) {
      prog.constraints.push_back(solver::lower_bound(tau_index(n, k), 0.0));
      prog.constraints.push_back(solver::upper_bound(tau_index(n, k), 1.0));
    }
  for (int n = 1; n <= n_slots; ++n) {
    std::vector<std::pair<int, double>> row;
    for (int k = 0; k <= num_gts; ++k) row.emplace_back(tau_index(n, k), 1.0);
    prog.eq_rows.push_back(std::move(row));
    prog.eq_rhs.push_back(1.0);
  }

  // Start: blend the incumbent with a WET-heavy interior allocation that is
  // strictly causality-slack for any power profile.
  double min_ratio = std::numeric_limits<double>::infinity();
  for (int k = 0; k < num_gts; ++k) {
    double consumed = 0.0, harvest = 0.0;
    for (int n = 2; n <= n_slots; ++n) {
      if (slot_local_energy) {
        consumed = powers.at(n, k);
        harvest = b_harv(n - 2, k);
      } else {
        consumed += powers.at(n, k);
        harvest += b_harv(n - 2, k);
      }
      if (consumed > 0.0) min_ratio = std::min(min_ratio, harvest / consumed);
    }
  }
  double mu = std::min(1e-3, 0.5 / static_cast<double>(num_gts + 1));
  if (std::isfinite(min_ratio)) mu = std::min(mu, 0.25 * min_ratio);
  if (!(mu > 0.0)) mu = 1e-12;

  std::vector<double> x(nv, 0.0);
  for (int n = 1; n <= n_slots; ++n) {
    for (int k = 1; k <= num_gts; ++k) x[tau_index(n, k)] = mu;
    x[tau_index(n, 0)] = 1.0 - static_cast<double>(num_gts) * mu;
  }
  if (warm) {
    if (warm->tau.rows() != static_cast<std::size_t>(n_slots) ||
        warm->tau.cols() != static_cast<std::size_t>(num_gts + 1))
      throw std::invalid_argument("time_allocation: warm start shape mismatch");
    for (int n = 1; n <= n_slots; ++n) {
      double row_sum = 0.0;
      for (int k = 0; k <= num_gts; ++k) row_sum += warm->tau(n - 1, k);
      const double norm = row_sum > 0.0 ? 1.0 / row_sum : 0.0;
      for (int k = 0; k <= num_gts; ++k)
        x[tau_index(n, k)] =
            0.999 * warm->tau(n - 1, k) * norm + 0.001 * x[tau_index(n, k)];
    }
  }
  double min_tput = std::numeric_limits<double>::infinity();
  for (int k = 0; k < num_gts; ++k) {
    double tput = 0.0;
    for (int n = 2; n <= n_slots; ++n) tput += a_rate(n - 1, k) * x[tau_index(n, k + 1)];
    min_tput = std::min(min_tput, tput * inv_n);
  }
  x[0] = min_tput - std::max(1e-9, 1e-4 * (1.0 + std::abs(min_tput)));
  const double rmin_lo = std::min(-1.0, x[0] - 0.5);
  prog.constraints.push_back(solver::lower_bound(0, rmin_lo));
  prog.constraints.push_back(solver::upper_bound(0, rate_top + 1.0));
  prog.start = std::move(x);

  AllocationResult res;
  res.status = solver::solve_barrier(prog, cfg.barrier_tol / 2.0);
  if (res.status.reason != solver::SolveStatus::Term::optimal) {
    res.error = "time allocation LP failed: " + res.status.message;
    return res;
  }
  res.alloc.tau = Mat(n_slots, num_gts + 1);
  for (int n = 1; n <= n_slots; ++n) {
    double row_sum = 0.0;
    for (int k = 0; k <= num_gts; ++k) row_sum += res.status.x[tau_index(n, k)];
    // The barrier keeps the per-slot sums near 1; normalize away the last
    // regularized step's drift so downstream consumers see exact rows.
    const double norm = 1.0 / row_sum;
    for (int k = 0; k <= num_gts; ++k)
      res.alloc.tau(n - 1, k) = res.status.x[tau_index(n, k)] * norm;
  }

  auto tput_of = [&](const TimeAllocation& a) {
    double mn = std::numeric_limits<double>::infinity();
    for (int k = 0; k < num_gts; ++k) {
      double acc = 0.0;
      for (int n = 2; n <= n_slots; ++n) acc += a_rate(n - 1, k) * a.tau(n - 1, k + 1);
      mn = std::min(mn, acc * inv_n);
    }
    return mn;
  };
  res.r_min = tput_of(res.alloc);
  // Monotone safeguard: never report less than the incumbent achieves.
  if (warm) {
    const double warm_value = tput_of(*warm);
    if (res.r_min < warm_value) {
      res.alloc = *warm;
      res.r_min = warm_value;
    }
  }
  res.ok = true;
  return res;
}

struct PlanOutcome {
  SolutionBundle bundle;  // best-so-far feasible bundle, also on failure
  bool ok = false;
  bool converged = false;
  std::string error;
  int outer_iters = 0;
  int cccp_iters_total = 0;
};

// Hooks that turn the proposed alternation into the baseline variants.
struct AlternationOptions {
  bool freeze_positions = false;                  // circular / static trajectories
  bool freeze_time_allocation = false;            // equal time allocation
  bool npc_power_rule = false;                    // powers from the previous-slot harvest rule
  std::optional<std::vector<Trajectory>> init_trajectories;
};

namespace detail {

// Previous-slot harvest rule: spend everything harvested in slot n-1 during
// slot n, capped by the peak power; no opportunity means no transmission.
inline Mat rule_powers(const Scenario& sc, const Trajectory& traj_energy,
                       const TimeAllocation& alloc) {
  const int n_slots = sc.slots;
  const int num_gts = static_cast<int>(sc.num_gts());
  const double delta = sc.slot_len_s();
  const double h = sc.altitude(traj_energy.role);
  Mat p(n_slots, num_gts);
  for (int n = 2; n <= n_slots; ++n)
    for (int k = 0; k < num_gts; ++k) {
      const double tau = alloc.tau(n - 1, k + 1);
      if (tau <= 0.0) continue;
      const double gain = model::channel_gain(traj_energy.pts[n - 2], sc.gts[k], h, sc.g0);
      const double harvested =
          model::harvested_energy(alloc.tau(n - 2, 0), delta, sc.zeta, gain, sc.p_dl_w);
      p(n - 1, k) = std::min(harvested / (delta * tau), sc.p_ul_max_w);
    }
  return p;
}

inline PlanOutcome run_alternation(const Scenario& sc, const PlannerConfig& cfg, SystemMode mode,
                                   const AlternationOptions& opts) {
  sc.validate();
  cfg.validate();
  const int n_slots = sc.slots;
  const std::size_t num_gts = sc.num_gts();

  PlanOutcome out;
  TimeAllocation alloc = TimeAllocation::uniform(n_slots, num_gts);

  SubproblemSolution cur;
  if (opts.init_trajectories) {
    cur.trajectories = *opts.init_trajectories;
  } else if (mode == SystemMode::integrated) {
    cur.trajectories = {circular_init(sc, sc.vmax_hybrid_mps, 0.0, Role::hybrid, cfg.radius_shrink)};
  } else {
    // Phase offset pi breaks the symmetry between the two roles; identical
    // starts tend to lock both UAVs onto the same path.
    cur.trajectories = {
        circular_init(sc, sc.vmax_info_mps, 0.0, Role::info, cfg.radius_shrink),
        circular_init(sc, sc.vmax_energy_mps, std::numbers::pi, Role::energy, cfg.radius_shrink)};
  }
  for (const auto& t : cur.trajectories) cur.z.push_back(squared_distances(t, sc));
  cur.powers = PowerSchedule::zeros(n_slots, num_gts);
  cur.r_min = 0.0;

  Mat npc_fixed;
  if (opts.npc_power_rule) npc_fixed = rule_powers(sc, cur.trajectories.back(), alloc);

  auto assemble = [&](std::vector<TraceEntry> trace) {
    SolutionBundle bundle;
    bundle.trajectories = cur.trajectories;
    bundle.allocation = alloc;
    bundle.powers = cur.powers;
    bundle.per_gt_rates.resize(num_gts);
    double mn = std::numeric_limits<double>::infinity();
    const Trajectory& ti = bundle.info_trajectory();
    for (std::size_t k = 0; k < num_gts; ++k) {
      bundle.per_gt_rates[k] = model::average_rate(k, ti, alloc, bundle.powers, sc);
      mn = std::min(mn, bundle.per_gt_rates[k]);
    }
    bundle.r_min = mn;
    bundle.trace = std::move(trace);
    return bundle;
  };

  std::vector<TraceEntry> trace;
  double outer_prev = std::numeric_limits<double>::quiet_NaN();
  for (int q = 1; q <= cfg.outer_max_iter; ++q) {
    out.outer_iters = q;

    CccpOptions step_opts;
    step_opts.freeze_positions = opts.freeze_positions;
    if (opts.npc_power_rule) {
      step_opts.fixed_powers = &npc_fixed;
      step_opts.slot_local_energy = true;
    }

    double inner_prev = std::numeric_limits<double>::quiet_NaN();
    int i = 0;
    while (i < cfg.cccp_max_iter) {
      ++i;
      if (opts.npc_power_rule) {
        // The rule follows the harvest, so it tracks the moving trajectory.
        npc_fixed = rule_powers(sc, cur.trajectories.back(), alloc);
        cur.powers.p_ul = npc_fixed;
      }
      StepResult step = cccp_step(sc, alloc, cur, mode, cfg, step_opts);
      ++out.cccp_iters_total;
      if (!step.ok) {
        out.bundle = assemble(std::move(trace));
        out.error = "outer " + std::to_string(q) + ", cccp " + std::to_string(i) + ": " + step.error;
        return out;
      }
      cur = std::move(step.sol);
      trace.push_back({q, i, cur.r_min});
      if (!std::isnan(inner_prev) && std::abs(cur.r_min - inner_prev) < cfg.cccp_tol) break;
      inner_prev = cur.r_min;
    }

    double r_q = cur.r_min;
    if (opts.freeze_time_allocation) {
      // Equal time allocation: no LP phase, the CCCP value is the iterate.
      out.converged = true;
      break;
    }
    if (opts.npc_power_rule) {
      // tau -> P -> tau fixed-point sweep. Each round's (tau, rule(tau))
      // pair is feasible by construction; the sweep may orbit rather than
      // settle, so keep the best consistent pair seen.
      PowerSchedule p_cur;
      p_cur.p_ul = rule_powers(sc, cur.trajectories.back(), alloc);
      TimeAllocation best_alloc = alloc;
      Mat best_p = p_cur.p_ul;
      double best_v = min_throughput(sc, alloc, cur.trajectories, p_cur);
      for (int round = 0; round < 10; ++round) {
        AllocationResult lp = time_allocation(sc, cur.trajectories, p_cur, cfg, &alloc, true);
        if (!lp.ok) {
          out.bundle = assemble(std::move(trace));
          out.error = lp.error;
          return out;
        }
        alloc = lp.alloc;
        Mat p_next = rule_powers(sc, cur.trajectories.back(), alloc);
        PowerSchedule p_cand;
        p_cand.p_ul = p_next;
        const double v = min_throughput(sc, alloc, cur.trajectories, p_cand);
        if (v > best_v) {
          best_v = v;
          best_alloc = alloc;
          best_p = p_next;
        }
        double dp = 0.0;
        for (std::size_t idx = 0; idx < p_next.data().size(); ++idx)
          dp = std::max(dp, std::abs(p_next.data()[idx] - p_cur.p_ul.data()[idx]));
        p_cur.p_ul = std::move(p_next);
        if (dp < 1e-9) break;
      }
      alloc = best_alloc;
      cur.powers.p_ul = best_p;
      npc_fixed = best_p;
      r_q = best_v;
    } else {
      AllocationResult lp = time_allocation(sc, cur.trajectories, cur.powers, cfg, &alloc);
      if (!lp.ok) {
        out.bundle = assemble(std::move(trace));
        out.error = lp.error;
        return out;
      }
      alloc = lp.alloc;
      r_q = lp.r_min;
    }
    trace.push_back({q, i + 1, r_q});

    if (!std::isnan(outer_prev) && std::abs(r_q - outer_prev) < cfg.outer_tol) {
      out.converged = true;
      break;
    }
    outer_prev = r_q;
  }

  out.bundle = assemble(std::move(trace));
  out.ok = true;
  return out;
}

}  // namespace detail

// Full planning run per the alternating scheme: circular initialization,
// CCCP until the surrogate objective settles, time-allocation LP, repeat
// until the LP value settles.
inline PlanOutcome solve(const Scenario& sc, const PlannerConfig& cfg = {},
                         SystemMode mode = SystemMode::integrated) {
  return detail::run_alternation(sc, cfg, mode, {});
}

}  // namespace wpcn::planner
