#pragma once

// Brute-force oracle for the time-allocation LP: enumerates every basic
// solution (vertex) of the (R_min, tau) polytope and returns the best
// feasible objective. Independent of the planner's solver path; the rate
// and harvest coefficients are rebuilt here from the model formulas.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "wpcn/linalg.hpp"
#include "wpcn/model.hpp"
#include "wpcn/types.hpp"

namespace wpcn::test {

inline double time_allocation_vertex_oracle(const Scenario& sc,
                                            const std::vector<Trajectory>& trajs,
                                            const PowerSchedule& powers) {
  const int n_slots = sc.slots;
  const int num_gts = static_cast<int>(sc.num_gts());
  const Trajectory& traj_info = trajs.front();
  const Trajectory& traj_energy = trajs.back();
  const double h_i = sc.altitude(traj_info.role);
  const double h_e = sc.altitude(traj_energy.role);
  const double inv_n = 1.0 / n_slots;

  Mat a_rate(n_slots, num_gts), b_harv(n_slots, num_gts);
  for (int n = 1; n <= n_slots; ++n)
    for (int k = 0; k < num_gts; ++k) {
      const double gain_i = model::channel_gain(traj_info.pts[n - 1], sc.gts[k], h_i, sc.g0);
      a_rate(n - 1, k) =
          n == 1 ? 0.0 : model::instantaneous_rate(powers.at(n, k), gain_i, sc.eta, sc.noise_w);
      b_harv(n - 1, k) =
          sc.zeta * sc.p_dl_w * model::channel_gain(traj_energy.pts[n - 1], sc.gts[k], h_e, sc.g0);
    }

  // Variables: [R, tau(1,0..K), tau(2,0..K), ...]; nv = 1 + N(K+1).
  const int nv = 1 + n_slots * (num_gts + 1);
  auto tau_index = [&](int n, int k) { return 1 + (n - 1) * (num_gts + 1) + k; };

  // Inequality rows (g x <= h) and equality rows.
  std::vector<std::vector<double>> ineq;
  std::vector<double> ineq_rhs;
  auto add_row = [&](std::vector<double> row, double rhs) {
    ineq.push_back(std::move(row));
    ineq_rhs.push_back(rhs);
  };
  for (int k = 0; k < num_gts; ++k) {
    std::vector<double> row(nv, 0.0);
    row[0] = 1.0;
    for (int n = 2; n <= n_slots; ++n) row[tau_index(n, k + 1)] = -a_rate(n - 1, k) * inv_n;
    add_row(std::move(row), 0.0);
  }
  for (int k = 0; k < num_gts; ++k)
    for (int n = 2; n <= n_slots; ++n) {
      std::vector<double> row(nv, 0.0);
      for (int i = 2; i <= n; ++i) row[tau_index(i, k + 1)] = powers.at(i, k);
      for (int i = 1; i <= n - 1; ++i) row[tau_index(i, 0)] = -b_harv(i - 1, k);
      add_row(std::move(row), 0.0);
    }
  for (int n = 1; n <= n_slots; ++n)
    for (int k = 0; k <= num_gts; ++k) {
      std::vector<double> lo(nv, 0.0), hi(nv, 0.0);
      lo[tau_index(n, k)] = -1.0;
      hi[tau_index(n, k)] = 1.0;
      add_row(std::move(lo), 0.0);
      add_row(std::move(hi), 1.0);
    }
  {  // R bounds keep every basis square-solvable.
    std::vector<double> lo(nv, 0.0), hi(nv, 0.0);
    lo[0] = -1.0;
    hi[0] = 1.0;
    double cap = 0.0;
    for (int k = 0; k < num_gts; ++k) {
      double acc = 0.0;
      for (int n = 2; n <= n_slots; ++n) acc += a_rate(n - 1, k) * inv_n;
      cap = std::max(cap, acc);
    }
    add_row(std::move(lo), 1.0);
    add_row(std::move(hi), cap + 1.0);
  }

  const int m = static_cast<int>(ineq.size());
  const int p = n_slots;  // per-slot sum equalities
  const int need = nv - p;

  auto feasible = [&](const std::vector<double>& x) {
    for (int r = 0; r < m; ++r) {
      double v = -ineq_rhs[r];
      for (int j = 0; j < nv; ++j) v += ineq[r][j] * x[j];
      if (v > 1e-9) return false;
    }
    return true;
  };

  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> pick(need);
  std::function<void(int, int)> rec = [&](int offset, int depth) {
    if (depth == need) {
      Mat sys(nv, nv);
      std::vector<double> rhs(nv);
      for (int n = 1; n <= n_slots; ++n) {
        for (int k = 0; k <= num_gts; ++k) sys(n - 1, tau_index(n, k)) = 1.0;
        rhs[n - 1] = 1.0;
      }
      for (int i = 0; i < need; ++i) {
        for (int j = 0; j < nv; ++j) sys(p + i, j) = ineq[pick[i]][j];
        rhs[p + i] = ineq_rhs[pick[i]];
      }
      std::vector<double> x;
      if (!solve_linear(sys, rhs, x)) return;
      if (!feasible(x)) return;
      best = std::max(best, x[0]);
      return;
    }
    for (int i = offset; i < m; ++i) {
      pick[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace wpcn::test
