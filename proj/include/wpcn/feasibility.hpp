#pragma once

// Exact evaluator and feasibility oracle for candidate solutions. Every
// optimizer output must pass check(); violations are reported as data, never
// as exceptions.

#include <cmath>
#include <string>
#include <vector>

#include "wpcn/model.hpp"
#include "wpcn/types.hpp"

namespace wpcn::feasibility {

// Per-GT, per-slot energy bookkeeping in joules. available(k, n) is the
// balance at the *start* of slot n: everything harvested minus everything
// consumed in slots 1..n-1.
struct EnergyLedger {
  Mat harvested;  // N x K (J)
  Mat consumed;   // N x K (J)
  Mat available;  // N x K (J)
};

struct Violation {
  std::string constraint;  // "throughput", "energy", "speed", "period", ...
  int slot = 0;            // 0 when not slot-specific
  int gt = -1;             // -1 when not GT-specific
  double magnitude = 0.0;  // how far past the bound
};

struct FeasibilityReport {
  bool ok = true;
  std::vector<Violation> violations;
  std::vector<std::string> warnings;
  double r_min = 0.0;
  std::vector<double> per_gt_rates;
  EnergyLedger ledger;
};

inline EnergyLedger build_ledger(const Trajectory& traj_energy, const TimeAllocation& alloc,
                                 const PowerSchedule& powers, const Scenario& sc) {
  const std::size_t n_slots = static_cast<std::size_t>(sc.slots);
  const std::size_t num_gts = sc.num_gts();
  if (traj_energy.slots() != n_slots || alloc.tau.rows() != n_slots ||
      alloc.tau.cols() != num_gts + 1 || powers.p_ul.rows() != n_slots ||
      powers.p_ul.cols() != num_gts)
    throw std::invalid_argument("build_ledger: dimension mismatch");
  if (traj_energy.role == Role::info)
    throw std::invalid_argument("build_ledger: harvesting trajectory must be hybrid or energy");

  const double delta = sc.slot_len_s();
  const double h = sc.altitude(traj_energy.role);
  EnergyLedger led;
  led.harvested = Mat(n_slots, num_gts);
  led.consumed = Mat(n_slots, num_gts);
  led.available = Mat(n_slots, num_gts);
  for (std::size_t k = 0; k < num_gts; ++k) {
    double balance = 0.0;
    for (std::size_t n = 0; n < n_slots; ++n) {
      led.available(n, k) = balance;
      const double gain = model::channel_gain(traj_energy.pts[n], sc.gts[k], h, sc.g0);
      led.harvested(n, k) = model::harvested_energy(alloc.tau(n, 0), delta, sc.zeta, gain, sc.p_dl_w);
      led.consumed(n, k) = alloc.tau(n, k + 1) * delta * powers.p_ul(n, k);
      balance += led.harvested(n, k) - led.consumed(n, k);
    }
  }
  return led;
}

// Verifies every constraint of the problem the bundle claims to solve:
// throughput consistency of r_min, energy causality, speed and periodicity,
// the power box with the slot-1 zero, and the tau box/sum. A constraint
// g <= b passes when g <= b + eps * max(1, |b|).
inline FeasibilityReport check(const SolutionBundle& sol, const Scenario& sc, double eps = 1e-6) {
  if (!(eps > 0.0)) throw std::invalid_argument("check: eps must be > 0");
  const int n_slots = sc.slots;
  const std::size_t num_gts = sc.num_gts();

  FeasibilityReport rep;
  auto fail = [&](std::string id, int slot, int gt, double mag) {
    rep.violations.push_back({std::move(id), slot, gt, mag});
  };
  auto within = [&](double g, double b) { return g <= b + eps * std::max(1.0, std::abs(b)); };

  if (sol.trajectories.empty() || sol.trajectories.size() > 2) {
    fail("shape", 0, -1, static_cast<double>(sol.trajectories.size()));
    rep.ok = false;
    return rep;
  }
  const Trajectory& traj_info = sol.info_trajectory();
  const Trajectory& traj_energy = sol.energy_trajectory();
  for (const auto& t : sol.trajectories) {
    if (t.slots() != static_cast<std::size_t>(n_slots)) {
      fail("shape", 0, -1, static_cast<double>(t.slots()));
      rep.ok = false;
      return rep;
    }
  }
  if (sol.allocation.tau.rows() != static_cast<std::size_t>(n_slots) ||
      sol.allocation.tau.cols() != num_gts + 1 ||
      sol.powers.p_ul.rows() != static_cast<std::size_t>(n_slots) ||
      sol.powers.p_ul.cols() != num_gts) {
    fail("shape", 0, -1, 0.0);
    rep.ok = false;
    return rep;
  }

  // tau box and per-slot sum.
  for (int n = 1; n <= n_slots; ++n) {
    double row_sum = 0.0;
    for (std::size_t k = 0; k <= num_gts; ++k) {
      const double tau = sol.allocation.tau(n - 1, k);
      if (!within(-tau, 0.0)) fail("tau_box", n, static_cast<int>(k) - 1, -tau);
      if (!within(tau, 1.0)) fail("tau_box", n, static_cast<int>(k) - 1, tau - 1.0);
      row_sum += tau;
    }
    if (!within(row_sum, 1.0) || !within(-row_sum, -1.0))
      fail("tau_sum", n, -1, row_sum - 1.0);
  }
  for (std::size_t k = 0; k < num_gts; ++k)
    if (sol.allocation.tau(0, k + 1) > eps)
      rep.warnings.push_back("tau[1] for GT " + std::to_string(k + 1) +
                             " is positive; slot 1 carries no uplink power");

  // Power box; slot 1 must be silent.
  for (int n = 1; n <= n_slots; ++n)
    for (std::size_t k = 0; k < num_gts; ++k) {
      const double p = sol.powers.p_ul(n - 1, k);
      if (!within(-p, 0.0)) fail("power_box", n, static_cast<int>(k), -p);
      if (!within(p, sc.p_ul_max_w)) fail("power_box", n, static_cast<int>(k), p - sc.p_ul_max_w);
    }
  for (std::size_t k = 0; k < num_gts; ++k)
    if (sol.powers.p_ul(0, k) > eps * sc.p_ul_max_w)
      fail("power_slot1", 1, static_cast<int>(k), sol.powers.p_ul(0, k));

  // Speed and periodicity per trajectory.
  const double delta = sc.slot_len_s();
  for (const auto& t : sol.trajectories) {
    const double cap = delta * sc.vmax(t.role);
    for (int n = 2; n <= n_slots; ++n) {
      const double d = dist(t.pts[n - 1], t.pts[n - 2]);
      if (!within(d, cap)) fail(std::string("speed_") + role_name(t.role), n, -1, d - cap);
    }
    const double d = dist(t.pts[n_slots - 1], t.pts[0]);
    if (!within(d, cap)) fail(std::string("period_") + role_name(t.role), n_slots, -1, d - cap);
  }

  // Energy causality, in the delta-free wattage form: cumulative tau*P vs
  // cumulative harvested power. The ledger keeps the same content in joules.
  rep.ledger = build_ledger(traj_energy, sol.allocation, sol.powers, sc);
  const double h_e = sc.altitude(traj_energy.role);
  for (std::size_t k = 0; k < num_gts; ++k) {
    double consumed = 0.0;
    double harvested = 0.0;
    for (int n = 2; n <= n_slots; ++n) {
      consumed += sol.allocation.tau(n - 1, k + 1) * sol.powers.p_ul(n - 1, k);
      harvested += sol.allocation.tau(n - 2, 0) * sc.zeta * sc.p_dl_w *
                   model::channel_gain(traj_energy.pts[n - 2], sc.gts[k], h_e, sc.g0);
      if (!within(consumed, harvested))
        fail("energy", n, static_cast<int>(k), consumed - harvested);
    }
  }

  // Recompute rates from scratch and verify the claimed minimum.
  rep.per_gt_rates.resize(num_gts);
  double min_rate = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < num_gts; ++k) {
    rep.per_gt_rates[k] = model::average_rate(k, traj_info, sol.allocation, sol.powers, sc);
    min_rate = std::min(min_rate, rep.per_gt_rates[k]);
  }
  rep.r_min = min_rate;
  if (std::abs(sol.r_min - min_rate) > 1e-9 * std::max(1.0, std::abs(min_rate)))
    fail("throughput", 0, -1, sol.r_min - min_rate);

  rep.ok = rep.violations.empty();
  return rep;
}

}  // namespace wpcn::feasibility
