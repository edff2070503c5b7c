#pragma once

// Concave surrogate bounds used by the CCCP inner loop, with closed-form
// derivatives. Both are first-order expansions in the squared-distance
// variable z around z_hat and touch the exact expression at z = z_hat.
//
//   rate_lower:   log2((z + h^2 + c*p)/(zh + h^2))
//                   - ((z + h^2)/(zh + h^2) - 1) / ln 2
//                 <= log2(1 + c*p/(z + h^2)),  jointly concave in (z, p)
//   energy_lower: (coeff/(zh + h^2)) * (2 - (z + h^2)/(zh + h^2))
//                 <= coeff/(z + h^2),          affine in z
//
// The 1/ln2 on the linear rate term is the slope of log2 at the expansion
// point; without it the expression overshoots the exact rate for z > zh and
// is not a bound.

#include <cmath>
#include <stdexcept>

namespace wpcn::bounds {

namespace detail {
constexpr double kInvLn2 = 1.4426950408889634;  // 1/ln 2

inline void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}
}  // namespace detail

// Lower bound on the uplink rate at squared distance z, linearized at z_hat.
// c is the precomputed SNR coefficient g0*eta/sigma^2 (1/W).
inline double rate_lower(double z, double p_ul, double z_hat, double h, double c) {
  detail::require(z >= 0.0 && z_hat >= 0.0 && p_ul >= 0.0, "rate_lower: negative input");
  const double h2 = h * h;
  const double w = z + h2 + c * p_ul;
  const double wh = z_hat + h2;
  return std::log2(w / wh) - ((z + h2) / wh - 1.0) * detail::kInvLn2;
}

// Lower bound on harvested energy at squared distance z, linearized at z_hat.
// coeff carries tau0 * delta * zeta * g0 * P_dl, so the exact value is
// coeff / (z + h^2).
inline double energy_lower(double z, double z_hat, double h, double coeff) {
  detail::require(z >= 0.0 && z_hat >= 0.0 && coeff >= 0.0, "energy_lower: negative input");
  const double h2 = h * h;
  const double wh = z_hat + h2;
  return (coeff / wh) * (2.0 - (z + h2) / wh);
}

struct RateLowerDerivs {
  double value = 0.0;
  double dz = 0.0;
  double dp = 0.0;
  double dzz = 0.0;
  double dzp = 0.0;
  double dpp = 0.0;
};

// Gradient and Hessian of rate_lower w.r.t. (z, p_ul). The Hessian is the
// rank-one matrix -(1/(w^2 ln2)) [1 c; c c^2], negative semidefinite.
inline RateLowerDerivs rate_lower_derivs(double z, double p_ul, double z_hat, double h, double c) {
  RateLowerDerivs d;
  const double h2 = h * h;
  const double w = z + h2 + c * p_ul;
  const double wh = z_hat + h2;
  d.value = std::log2(w / wh) - ((z + h2) / wh - 1.0) * detail::kInvLn2;
  const double iw = detail::kInvLn2 / w;
  d.dz = iw - detail::kInvLn2 / wh;
  d.dp = c * iw;
  const double iww = detail::kInvLn2 / (w * w);
  d.dzz = -iww;
  d.dzp = -c * iww;
  d.dpp = -c * c * iww;
  return d;
}

// d(energy_lower)/dz, constant in z since the bound is affine.
inline double energy_lower_slope(double z_hat, double h, double coeff) {
  const double wh = z_hat + h * h;
  return -coeff / (wh * wh);
}

// Exact counterparts, for dominance checks and tight-point evaluation.
inline double exact_rate(double z, double p_ul, double h, double c) {
  return std::log2(1.0 + c * p_ul / (z + h * h));
}
inline double exact_energy(double z, double h, double coeff) { return coeff / (z + h * h); }

}  // namespace wpcn::bounds
