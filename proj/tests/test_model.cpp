#include <doctest.h>

#include <cmath>

#include "test_rng.hpp"
#include "wpcn/model.hpp"

using namespace wpcn;

namespace {

Scenario default_scenario(std::vector<Vec2> gts, double horizon, int slots) {
  Scenario sc;
  sc.gts = std::move(gts);
  sc.horizon_s = horizon;
  sc.slots = slots;
  sc.alt_hybrid_m = sc.alt_info_m = sc.alt_energy_m = 8.0;
  sc.vmax_hybrid_mps = sc.vmax_info_mps = sc.vmax_energy_mps = 5.0;
  sc.p_dl_w = 1.0;       // 30 dBm
  sc.p_ul_max_w = 1e-4;  // -10 dBm
  sc.zeta = 0.6;
  sc.eta = 0.9;
  sc.g0 = 1e-3;    // -30 dB
  sc.noise_w = 1e-12;  // -90 dBm
  return sc;
}

}  // namespace

TEST_CASE("channel gain closed form") {
  CHECK(model::channel_gain({0, 0}, {0, 0}, 8.0, 1e-3) == doctest::Approx(1.5625e-5).epsilon(1e-12));
  CHECK(model::channel_gain({6, 0}, {0, 0}, 8.0, 1e-3) == doctest::Approx(1.0e-5).epsilon(1e-12));
  CHECK(model::channel_gain({3, -4}, {1, 1}, 2.0, 0.0) == 0.0);
  CHECK_THROWS_AS(model::channel_gain({0, 0}, {0, 0}, 0.0, 1e-3), std::invalid_argument);
  CHECK_THROWS_AS(model::channel_gain({std::nan(""), 0}, {0, 0}, 8.0, 1e-3), std::invalid_argument);
}

TEST_CASE("channel gain translation invariance and monotonicity") {
  test::Rng rng(7);
  for (int it = 0; it < 200; ++it) {
    const Vec2 p{rng.uniform(-50, 50), rng.uniform(-50, 50)};
    const Vec2 u{rng.uniform(-50, 50), rng.uniform(-50, 50)};
    const Vec2 off{rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3)};
    const double g = model::channel_gain(p, u, 8.0, 1e-3);
    const double g_shift = model::channel_gain(p + off, u + off, 8.0, 1e-3);
    CHECK(g == doctest::Approx(g_shift).epsilon(1e-12));
    // Moving radially outward never increases the gain.
    const Vec2 dir = u + (p - u) * (1.0 + rng.uniform(0.0, 2.0));
    CHECK(model::channel_gain(dir, u, 8.0, 1e-3) <= g + 1e-18);
  }
}

TEST_CASE("harvested energy product form") {
  CHECK(model::harvested_energy(0.0, 1.0, 0.6, 1e-5, 1.0) == 0.0);
  CHECK(model::harvested_energy(0.125, 1.0, 0.6, 1e-5, 1.0) ==
        doctest::Approx(7.5e-7).epsilon(1e-12));
  CHECK(model::harvested_energy(1.0, 1.0, 1.0, 1.0, 1.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(model::harvested_energy(1.5, 1.0, 0.5, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("instantaneous rate") {
  CHECK(model::instantaneous_rate(0.0, 1e-5, 0.9, 1e-12) == 0.0);
  // SNR = 0.9 * 1e-5 * 1e-4 / 1e-12 = 900.
  CHECK(model::instantaneous_rate(1e-4, 1e-5, 0.9, 1e-12) ==
        doctest::Approx(std::log2(901.0)).epsilon(1e-12));
  CHECK(std::log2(901.0) == doctest::Approx(9.815383).epsilon(1e-6));
  // eta * gain * p / sigma2 == 1 -> exactly one bit.
  CHECK(model::instantaneous_rate(2.0, 0.5, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(model::instantaneous_rate(-1.0, 1e-5, 0.9, 1e-12), std::invalid_argument);
  CHECK_THROWS_AS(model::instantaneous_rate(1.0, 1e-5, 0.9, 0.0), std::invalid_argument);
}

TEST_CASE("average rate single-slot example") {
  // N=2, tau_1[2] = 0.06, slot-2 rate = log2(901): R = 0.5 * 0.06 * 9.81524.
  Scenario sc = default_scenario({{0, 0}}, 2.0, 2);
  Trajectory t;
  t.role = Role::hybrid;
  t.pts = {{6, 0}, {6, 0}};  // gain 1e-5 over the GT
  TimeAllocation alloc = TimeAllocation::uniform(2, 1);
  alloc.tau(0, 0) = 1.0;
  alloc.tau(0, 1) = 0.0;
  alloc.tau(1, 0) = 0.94;
  alloc.tau(1, 1) = 0.06;
  PowerSchedule p = PowerSchedule::zeros(2, 1);
  p.p_ul(1, 0) = 1e-4;
  const double r = model::average_rate(0, t, alloc, p, sc);
  CHECK(r == doctest::Approx(0.5 * 0.06 * std::log2(901.0)).epsilon(1e-12));
  CHECK(r == doctest::Approx(0.294462).epsilon(1e-4));

  SUBCASE("zero tau or zero power mean zero rate") {
    PowerSchedule zeros = PowerSchedule::zeros(2, 1);
    CHECK(model::average_rate(0, t, alloc, zeros, sc) == 0.0);
    alloc.tau(1, 1) = 0.0;
    CHECK(model::average_rate(0, t, alloc, p, sc) == 0.0);
  }
  SUBCASE("dimension mismatch rejected") {
    PowerSchedule bad = PowerSchedule::zeros(3, 1);
    CHECK_THROWS_AS(model::average_rate(0, t, alloc, bad, sc), std::invalid_argument);
    CHECK_THROWS_AS(model::average_rate(1, t, alloc, p, sc), std::invalid_argument);
  }
}

TEST_CASE("average rate is linear in the tau row and monotone in power") {
  Scenario sc = default_scenario({{10, 0}, {-5, 12}}, 10.0, 5);
  Trajectory t;
  t.role = Role::hybrid;
  t.pts = {{0, 0}, {2, 1}, {4, 2}, {2, 3}, {0, 1}};
  test::Rng rng(11);
  for (int it = 0; it < 50; ++it) {
    TimeAllocation a = TimeAllocation::uniform(5, 2);
    PowerSchedule p = PowerSchedule::zeros(5, 2);
    for (int n = 2; n <= 5; ++n)
      for (int k = 0; k < 2; ++k) p.p_ul(n - 1, k) = rng.uniform(0.0, 1e-4);
    for (int n = 1; n <= 5; ++n) {
      a.tau(n - 1, 1) = rng.uniform(0.0, 0.5);
      a.tau(n - 1, 2) = rng.uniform(0.0, 0.5);
      a.tau(n - 1, 0) = 1.0 - a.tau(n - 1, 1) - a.tau(n - 1, 2);
    }
    const double base = model::average_rate(0, t, a, p, sc);
    CHECK(base >= 0.0);
    // Scaling GT 0's tau row scales its rate by the same factor.
    const double f = rng.uniform(0.1, 1.9);
    TimeAllocation scaled = a;
    for (int n = 1; n <= 5; ++n) scaled.tau(n - 1, 1) = f * a.tau(n - 1, 1);
    CHECK(model::average_rate(0, t, scaled, p, sc) == doctest::Approx(f * base).epsilon(1e-10));
    // Raising any single power never lowers the rate.
    PowerSchedule bumped = p;
    const int n_pick = rng.uniform_int(2, 5);
    bumped.p_ul(n_pick - 1, 0) = std::min(1e-4, p.p_ul(n_pick - 1, 0) * 1.5 + 1e-6);
    CHECK(model::average_rate(0, t, a, bumped, sc) >= base - 1e-15);
  }
}

TEST_CASE("scenario validation") {
  Scenario sc = default_scenario({{0, 0}}, 10.0, 5);
  CHECK_NOTHROW(sc.validate());
  SUBCASE("no GTs") {
    sc.gts.clear();
    CHECK_THROWS_AS(sc.validate(), std::invalid_argument);
  }
  SUBCASE("one slot") {
    sc.slots = 1;
    CHECK_THROWS_AS(sc.validate(), std::invalid_argument);
  }
  SUBCASE("zero altitude") {
    sc.alt_hybrid_m = 0.0;
    CHECK_THROWS_AS(sc.validate(), std::invalid_argument);
  }
  SUBCASE("zeta out of range") {
    sc.zeta = 1.5;
    CHECK_THROWS_AS(sc.validate(), std::invalid_argument);
  }
  SUBCASE("slot length times slots equals horizon") {
    sc.horizon_s = 30.0;
    sc.slots = 50;
    CHECK(sc.slot_len_s() * sc.slots == doctest::Approx(30.0).epsilon(1e-15));
  }
}
