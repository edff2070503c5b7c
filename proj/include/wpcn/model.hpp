#pragma once

// Closed-form physical quantities of the air-to-ground WPCN link: channel
// gain, harvested energy, instantaneous and average uplink throughput.

#include <cmath>
#include <stdexcept>

#include "wpcn/types.hpp"

namespace wpcn::model {

// Line-of-sight channel power gain g0 / (|p-u|^2 + h^2) between a UAV at
// horizontal position p and altitude h and a GT at u.
inline double channel_gain(const Vec2& p, const Vec2& u, double altitude_m, double g0) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(u.x) || !std::isfinite(u.y) ||
      !std::isfinite(altitude_m) || !std::isfinite(g0))
    throw std::invalid_argument("channel_gain: non-finite input");
  if (!(altitude_m > 0.0)) throw std::invalid_argument("channel_gain: altitude must be > 0");
  if (g0 < 0.0) throw std::invalid_argument("channel_gain: negative reference gain");
  return g0 / (dist2(p, u) + altitude_m * altitude_m);
}

// Energy harvested by one GT during the WET subslot of one slot (J).
inline double harvested_energy(double tau0, double slot_len_s, double zeta, double gain,
                               double p_dl_w) {
  if (tau0 < 0.0 || tau0 > 1.0) throw std::invalid_argument("harvested_energy: tau0 out of [0,1]");
  if (slot_len_s < 0.0 || zeta < 0.0 || gain < 0.0 || p_dl_w < 0.0)
    throw std::invalid_argument("harvested_energy: negative input");
  return tau0 * slot_len_s * zeta * gain * p_dl_w;
}

// Uplink spectral efficiency log2(1 + eta*gain*p/sigma^2) in bits/s/Hz.
inline double instantaneous_rate(double p_ul_w, double gain, double eta, double sigma2_w) {
  if (p_ul_w < 0.0) throw std::invalid_argument("instantaneous_rate: negative power");
  if (!(sigma2_w > 0.0)) throw std::invalid_argument("instantaneous_rate: sigma2 must be > 0");
  return std::log2(1.0 + eta * gain * p_ul_w / sigma2_w);
}

// Average throughput of GT k over the period: (1/N) sum_{n>=2} tau_k[n] R_k[n].
// Slot 1 is excluded (no uplink there).
inline double average_rate(std::size_t k, const Trajectory& traj, const TimeAllocation& alloc,
                           const PowerSchedule& powers, const Scenario& sc) {
  const std::size_t n_slots = static_cast<std::size_t>(sc.slots);
  const std::size_t num_gts = sc.num_gts();
  if (k >= num_gts) throw std::invalid_argument("average_rate: GT index out of range");
  if (traj.slots() != n_slots || alloc.tau.rows() != n_slots || alloc.tau.cols() != num_gts + 1 ||
      powers.p_ul.rows() != n_slots || powers.p_ul.cols() != num_gts)
    throw std::invalid_argument("average_rate: dimension mismatch");
  const double h = sc.altitude(traj.role);
  double acc = 0.0;
  for (std::size_t n = 1; n < n_slots; ++n) {
    const double tau = alloc.tau(n, k + 1);
    if (tau == 0.0) continue;
    const double gain = channel_gain(traj.pts[n], sc.gts[k], h, sc.g0);
    acc += tau * instantaneous_rate(powers.p_ul(n, k), gain, sc.eta, sc.noise_w);
  }
  return acc / static_cast<double>(n_slots);
}

}  // namespace wpcn::model
