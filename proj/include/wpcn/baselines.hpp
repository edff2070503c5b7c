#pragma once

// Comparison schemes, all funneled through the same alternation driver and
// feasibility gate as the proposed planner:
//   static_ap - hybrid AP parked at the GT centroid, powers and TDMA optimized
//   circular  - trajectory frozen on the circular initialization path
//   eta       - equal time allocation, trajectory and powers via CCCP only
//   npc       - previous-slot harvest power rule inside the alternation

#include <stdexcept>

#include "wpcn/planner.hpp"

namespace wpcn::baselines {

enum class BaselineKind { static_ap, circular, eta, npc };

inline const char* baseline_name(BaselineKind k) {
  switch (k) {
    case BaselineKind::static_ap: return "static";
    case BaselineKind::circular: return "circular";
    case BaselineKind::eta: return "eta";
    case BaselineKind::npc: return "npc";
  }
  return "?";
}

// Uplink powers under the previous-slot harvest rule (exposed for tests).
inline Mat npc_rule_powers(const Scenario& sc, const Trajectory& traj_energy,
                           const TimeAllocation& alloc) {
  return planner::detail::rule_powers(sc, traj_energy, alloc);
}

inline planner::PlanOutcome run_baseline(BaselineKind kind, const Scenario& sc,
                                         const planner::PlannerConfig& cfg = {},
                                         planner::SystemMode mode = planner::SystemMode::integrated) {
  using planner::SystemMode;
  planner::AlternationOptions opts;
  switch (kind) {
    case BaselineKind::static_ap: {
      // Fixed hybrid AP at the centroid; only powers and tau are optimized.
      const Vec2 c = planner::centroid(sc.gts);
      Trajectory t;
      t.role = Role::hybrid;
      t.pts.assign(static_cast<std::size_t>(sc.slots), c);
      opts.init_trajectories = std::vector<Trajectory>{t};
      opts.freeze_positions = true;
      return planner::detail::run_alternation(sc, cfg, SystemMode::integrated, opts);
    }
    case BaselineKind::circular: {
      // Both roles ride the same circle, so the separated system reduces to
      // the integrated one; run the integrated pipeline on the frozen path.
      opts.init_trajectories = std::vector<Trajectory>{
          planner::circular_init(sc, sc.vmax_hybrid_mps, 0.0, Role::hybrid, cfg.radius_shrink)};
      opts.freeze_positions = true;
      return planner::detail::run_alternation(sc, cfg, SystemMode::integrated, opts);
    }
    case BaselineKind::eta:
      opts.freeze_time_allocation = true;
      return planner::detail::run_alternation(sc, cfg, mode, opts);
    case BaselineKind::npc:
      opts.npc_power_rule = true;
      return planner::detail::run_alternation(sc, cfg, mode, opts);
  }
  throw std::invalid_argument("run_baseline: unknown kind");
}

}  // namespace wpcn::baselines
