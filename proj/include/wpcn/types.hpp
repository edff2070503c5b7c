#pragma once

// Problem-instance and solution value types shared by every module.
// All quantities are linear SI units: meters, seconds, watts, joules.
// Rates are spectral efficiencies in bits/s/Hz.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "wpcn/linalg.hpp"

namespace wpcn {

enum class Role { hybrid, info, energy };

inline const char* role_name(Role r) {
  switch (r) {
    case Role::hybrid: return "hybrid";
    case Role::info: return "info";
    case Role::energy: return "energy";
  }
  return "?";
}

// Immutable problem instance: ground terminals, horizon discretization and
// the radio/energy parameters of the network.
struct Scenario {
  std::vector<Vec2> gts;      // GT positions u_k (m)
  double horizon_s = 0.0;     // total period T (s)
  int slots = 0;              // N; slot length is horizon_s / slots

  double alt_hybrid_m = 0.0;  // flight altitude of the hybrid UAV (m)
  double alt_info_m = 0.0;    // flight altitude of the info UAV (m)
  double alt_energy_m = 0.0;  // flight altitude of the energy UAV (m)

  double vmax_hybrid_mps = 0.0;
  double vmax_info_mps = 0.0;
  double vmax_energy_mps = 0.0;

  double p_dl_w = 0.0;      // downlink WET transmit power (W)
  double p_ul_max_w = 0.0;  // peak uplink power at each GT (W)
  double zeta = 0.0;        // energy-harvesting efficiency, (0,1]
  double eta = 0.0;         // stored-energy usage fraction, (0,1]
  double g0 = 0.0;          // reference channel gain at 1 m (linear)
  double noise_w = 0.0;     // noise variance sigma^2 (W)

  std::size_t num_gts() const { return gts.size(); }
  double slot_len_s() const { return horizon_s / static_cast<double>(slots); }

  double altitude(Role r) const {
    switch (r) {
      case Role::hybrid: return alt_hybrid_m;
      case Role::info: return alt_info_m;
      case Role::energy: return alt_energy_m;
    }
    return alt_hybrid_m;
  }
  double vmax(Role r) const {
    switch (r) {
      case Role::hybrid: return vmax_hybrid_mps;
      case Role::info: return vmax_info_mps;
      case Role::energy: return vmax_energy_mps;
    }
    return vmax_hybrid_mps;
  }

  // SNR-per-watt coefficient g0*eta/sigma^2 shared by all rate formulas.
  double snr_coeff() const { return g0 * eta / noise_w; }

  void validate() const {
    auto pos = [](double v, const char* what) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument(std::string("Scenario: ") + what + " must be finite and > 0");
    };
    if (gts.empty()) throw std::invalid_argument("Scenario: needs at least one GT");
    for (const auto& u : gts)
      if (!std::isfinite(u.x) || !std::isfinite(u.y))
        throw std::invalid_argument("Scenario: non-finite GT position");
    if (slots < 2) throw std::invalid_argument("Scenario: slots must be >= 2");
    pos(horizon_s, "horizon_s");
    pos(alt_hybrid_m, "alt_hybrid_m");
    pos(alt_info_m, "alt_info_m");
    pos(alt_energy_m, "alt_energy_m");
    if (vmax_hybrid_mps < 0 || vmax_info_mps < 0 || vmax_energy_mps < 0)
      throw std::invalid_argument("Scenario: negative speed");
    pos(p_dl_w, "p_dl_w");
    pos(p_ul_max_w, "p_ul_max_w");
    pos(g0, "g0");
    pos(noise_w, "noise_w");
    if (!(zeta > 0.0 && zeta <= 1.0)) throw std::invalid_argument("Scenario: zeta not in (0,1]");
    if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("Scenario: eta not in (0,1]");
  }
};

// Per-slot 2-D UAV positions; p[n] is the position at slot n (n = 1..N maps
// to index n-1).
struct Trajectory {
  Role role = Role::hybrid;
  std::vector<Vec2> pts;

  std::size_t slots() const { return pts.size(); }
  const Vec2& at_slot(int n) const { return pts.at(static_cast<std::size_t>(n - 1)); }
};

// TDMA split per slot: column 0 is the downlink WET subslot, columns 1..K the
// per-GT uplink WIT subslots. Rows sum to 1.
struct TimeAllocation {
  Mat tau;  // N x (K+1)

  static TimeAllocation uniform(int slots, std::size_t num_gts) {
    TimeAllocation a;
    a.tau = Mat(static_cast<std::size_t>(slots), num_gts + 1, 1.0 / static_cast<double>(num_gts + 1));
    return a;
  }

  double wet(int n) const { return tau(static_cast<std::size_t>(n - 1), 0); }
  double wit(int n, std::size_t k) const { return tau(static_cast<std::size_t>(n - 1), k + 1); }
};

// Uplink transmit powers, N x K; slot 1 carries no transmission (EH circuit
// delay), so row 0 must be zero.
struct PowerSchedule {
  Mat p_ul;  // N x K (W)

  static PowerSchedule zeros(int slots, std::size_t num_gts) {
    PowerSchedule p;
    p.p_ul = Mat(static_cast<std::size_t>(slots), num_gts);
    return p;
  }

  double at(int n, std::size_t k) const { return p_ul(static_cast<std::size_t>(n - 1), k); }
};

struct TraceEntry {
  int outer = 0;      // alternating-loop iteration q
  int inner = 0;      // CCCP iteration i; the per-q time-allocation value uses i = last+1
  double r_min = 0.0; // objective after that step
};

// Planner output: one trajectory (hybrid) or two (info + energy), the time
// allocation, powers, achieved rates and the convergence trace.
struct SolutionBundle {
  std::vector<Trajectory> trajectories;
  TimeAllocation allocation;
  PowerSchedule powers;
  double r_min = 0.0;
  std::vector<double> per_gt_rates;
  std::vector<TraceEntry> trace;

  bool separated() const { return trajectories.size() == 2; }

  const Trajectory& info_trajectory() const {
    for (const auto& t : trajectories)
      if (t.role == Role::info) return t;
    return trajectories.front();
  }
  const Trajectory& energy_trajectory() const {
    for (const auto& t : trajectories)
      if (t.role == Role::energy) return t;
    return trajectories.front();
  }
};

}  // namespace wpcn
