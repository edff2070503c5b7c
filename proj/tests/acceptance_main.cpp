// Acceptance suite. Each numbered criterion prints one PASS/FAIL line;
// the process exits nonzero if any requested criterion fails.
//
//   acceptance            runs all criteria
//   acceptance 3 7        runs a subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lp_oracle.hpp"
#include "scenario_fixtures.hpp"
#include "test_rng.hpp"
#include "wpcn/baselines.hpp"
#include "wpcn/bounds.hpp"
#include "wpcn/cli.hpp"
#include "wpcn/feasibility.hpp"
#include "wpcn/planner.hpp"

using namespace wpcn;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

double now_s() {
  using clock = std::chrono::steady_clock;
  static const auto t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// ---- criterion 1: bound dominance and tightness --------------------------

Criterion criterion_1() {
  Criterion c;
  test::Rng rng(101);
  const double snr_c = 9e8;
  int dominance_fail = 0, tight_fail = 0;
  for (int it = 0; it < 10000; ++it) {
    const double z = rng.uniform(0.0, 2e4);
    const double zh = rng.uniform(0.0, 2e4);
    const double p = rng.uniform(0.0, 1e-4);
    const double h = rng.uniform(1.0, 40.0);
    const double coeff = rng.uniform(0.0, 1e-5);
    if (bounds::rate_lower(z, p, zh, h, snr_c) > bounds::exact_rate(z, p, h, snr_c) + 1e-12)
      ++dominance_fail;
    if (bounds::energy_lower(z, zh, h, coeff) > bounds::exact_energy(z, h, coeff) + 1e-18)
      ++dominance_fail;
    const double r_t = bounds::rate_lower(z, p, z, h, snr_c);
    const double r_e = bounds::exact_rate(z, p, h, snr_c);
    if (std::abs(r_t - r_e) > 1e-10 * std::max(1.0, std::abs(r_e))) ++tight_fail;
    const double e_t = bounds::energy_lower(z, z, h, coeff);
    const double e_e = bounds::exact_energy(z, h, coeff);
    if (std::abs(e_t - e_e) > 1e-10 * std::max(1e-30, std::abs(e_e))) ++tight_fail;
  }
  c.require(dominance_fail == 0, "dominance failures: " + std::to_string(dominance_fail));
  c.require(tight_fail == 0, "tightness failures: " + std::to_string(tight_fail));
  return c;
}

// ---- criterion 2: derivative correctness ----------------------------------

Criterion criterion_2() {
  Criterion c;
  test::Rng rng(102);
  const double snr_c = 9e8;
  int bad = 0;
  for (int it = 0; it < 100; ++it) {
    const double z = rng.uniform(1.0, 1e4);
    const double zh = rng.uniform(1.0, 1e4);
    const double p = rng.uniform(1e-6, 1e-4);
    const double h = rng.uniform(2.0, 30.0);
    const auto d = bounds::rate_lower_derivs(z, p, zh, h, snr_c);
    auto f = [&](double zz, double pp) { return bounds::rate_lower(zz, pp, zh, h, snr_c); };
    const double hz = 1e-6 * (1.0 + z);
    const double hp = 1e-5 * (1e-5 + p);
    const double fd_z = (f(z + hz, p) - f(z - hz, p)) / (2 * hz);
    const double fd_p = (f(z, p + hp) - f(z, p - hp)) / (2 * hp);
    const double hz2 = 2e-3 * (z + h * h);  // second differences need a wider step
    const double fd_zz = (f(z + hz2, p) - 2 * f(z, p) + f(z - hz2, p)) / (hz2 * hz2);
    auto dz_at = [&](double pp) { return bounds::rate_lower_derivs(z, pp, zh, h, snr_c).dz; };
    auto dp_at = [&](double pp) { return bounds::rate_lower_derivs(z, pp, zh, h, snr_c).dp; };
    const double fd_zp = (dz_at(p + hp) - dz_at(p - hp)) / (2 * hp);
    const double fd_pp = (dp_at(p + hp) - dp_at(p - hp)) / (2 * hp);
    auto close = [](double a, double b) {
      return std::abs(a - b) <= 1e-5 * std::max(1e-12, std::max(std::abs(a), std::abs(b)));
    };
    if (!close(d.dz, fd_z) || !close(d.dp, fd_p) || !close(d.dzp, fd_zp) || !close(d.dpp, fd_pp))
      ++bad;
    if (std::abs(d.dzz - fd_zz) > 1e-4 * std::max(1e-12, std::abs(d.dzz))) ++bad;
    // energy_lower slope is constant in z.
    const double coeff = rng.uniform(1e-7, 1e-5);
    const double slope = bounds::energy_lower_slope(zh, h, coeff);
    const double he = 1e-4 * (1.0 + z);
    const double fd_e =
        (bounds::energy_lower(z + he, zh, h, coeff) - bounds::energy_lower(z - he, zh, h, coeff)) /
        (2 * he);
    if (!close(slope, fd_e)) ++bad;
  }
  c.require(bad == 0, "derivative mismatches at " + std::to_string(bad) + " points");
  return c;
}

// ---- criterion 3: LP oracle equivalence -----------------------------------

Criterion criterion_3() {
  Criterion c;
  test::Rng rng(103);
  double worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const int k = rng.uniform_int(1, 2);
    const int n = rng.uniform_int(2, 3);
    std::vector<Vec2> gts;
    for (int i = 0; i < k; ++i) gts.push_back({rng.uniform(-30, 30), rng.uniform(-30, 30)});
    Scenario sc = test::default_scenario(gts, static_cast<double>(n), n);
    Trajectory t;
    t.role = Role::hybrid;
    for (int s = 0; s < n; ++s) t.pts.push_back({rng.uniform(-30, 30), rng.uniform(-30, 30)});
    PowerSchedule p = PowerSchedule::zeros(n, k);
    for (int s = 2; s <= n; ++s)
      for (int i = 0; i < k; ++i) p.p_ul(s - 1, i) = rng.uniform(0.0, 1e-4);
    const auto res = planner::time_allocation(sc, {t}, p);
    if (!res.ok) {
      c.require(false, "LP failed on instance " + std::to_string(inst));
      continue;
    }
    const double oracle = test::time_allocation_vertex_oracle(sc, {t}, p);
    worst = std::max(worst, std::abs(res.r_min - oracle));
  }
  c.require(worst <= 1e-6, "worst objective gap vs enumeration: " + fmt(worst));
  c.detail = "worst gap " + fmt(worst);
  return c;
}

// ---- criterion 4: monotone convergence chain -------------------------------

Criterion criterion_4() {
  Criterion c;
  test::Rng rng(104);
  planner::PlannerConfig cfg;
  for (int inst = 0; inst < 10; ++inst) {
    Scenario sc = test::random_scenario(rng, 4, 20);
    const auto mode =
        inst % 2 == 0 ? planner::SystemMode::integrated : planner::SystemMode::separated;
    const auto out = planner::solve(sc, cfg, mode);
    c.require(out.ok, "solve failed on instance " + std::to_string(inst) + ": " + out.error);
    if (!out.ok) continue;
    c.require(out.outer_iters <= cfg.outer_max_iter,
              "outer iteration cap exceeded on instance " + std::to_string(inst));
    for (std::size_t i = 1; i < out.bundle.trace.size(); ++i) {
      const double drop = out.bundle.trace[i - 1].r_min - out.bundle.trace[i].r_min;
      if (drop > 1e-8) {
        c.require(false, "trace decreased by " + fmt(drop) + " on instance " +
                             std::to_string(inst));
        break;
      }
    }
  }
  return c;
}

// ---- criterion 5: feasibility gate -----------------------------------------

Criterion criterion_5() {
  Criterion c;
  test::Rng rng(105);
  auto gate = [&](const planner::PlanOutcome& out, const Scenario& sc, const std::string& tag) {
    c.require(out.ok, tag + ": solve failed: " + out.error);
    if (!out.ok) return;
    const auto rep = feasibility::check(out.bundle, sc, 1e-6);
    std::string what = tag + ":";
    for (const auto& v : rep.violations)
      what += " " + v.constraint + "(n=" + std::to_string(v.slot) + ")";
    c.require(rep.ok, what);
  };
  for (int inst = 0; inst < 3; ++inst) {
    Scenario sc = test::random_scenario(rng, 3, 12);
    gate(planner::solve(sc), sc, "proposed-int " + std::to_string(inst));
    gate(planner::solve(sc, {}, planner::SystemMode::separated), sc,
         "proposed-sep " + std::to_string(inst));
  }
  Scenario sc = test::default_scenario({{14, 2}, {-9, 7}, {-2, -11}}, 10.0, 8);
  gate(baselines::run_baseline(baselines::BaselineKind::static_ap, sc), sc, "static");
  gate(baselines::run_baseline(baselines::BaselineKind::circular, sc), sc, "circular");
  gate(baselines::run_baseline(baselines::BaselineKind::eta, sc), sc, "eta");
  gate(baselines::run_baseline(baselines::BaselineKind::npc, sc), sc, "npc");
  return c;
}

// ---- criterion 6: hover oracle ----------------------------------------------

Criterion criterion_6() {
  Criterion c;
  Scenario sc = test::default_scenario({{10, 10}}, 25.0, 25);
  sc.vmax_hybrid_mps = sc.vmax_info_mps = sc.vmax_energy_mps = 0.0;
  const auto out = planner::solve(sc);
  c.require(out.ok, "solve failed: " + out.error);
  if (!out.ok) return c;

  // Grid over the WET split with the induced exhausting power: per-slot
  // (s, 1-s) schedule, P = min(b s / (1-s), P_max).
  const double gain = sc.g0 / (sc.alt_hybrid_m * sc.alt_hybrid_m);
  const double b = sc.zeta * gain * sc.p_dl_w;       // harvest power at the GT (W)
  const double snr = sc.snr_coeff() * gain / sc.g0;  // eta*gain/sigma^2 (1/W)
  const int n_slots = sc.slots;
  double best = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double s = i * 1e-3;
    double p_tx = sc.p_ul_max_w;
    if (s < 1.0) p_tx = std::min(sc.p_ul_max_w, b * s / (1.0 - s));
    const double rate = (1.0 - s) * std::log2(1.0 + snr * p_tx);
    best = std::max(best, (n_slots - 1.0) / n_slots * rate);
  }
  const double gap = out.bundle.r_min - best;
  c.detail = "solve " + fmt(out.bundle.r_min) + " vs grid " + fmt(best);
  c.require(std::abs(gap) <= 2e-3, "solve vs grid-search gap " + fmt(gap));
  return c;
}

// ---- criterion 7: trend reproduction on the reference layout ----------------

struct RefRun {
  double r_min = 0.0;
  int outer_iters = 0;
  bool ok = false;
  std::string error;
};

Criterion criterion_7() {
  Criterion c;
  Scenario base = test::default_scenario(test::reference_layout(), 30.0, 50);
  planner::PlannerConfig cfg;

  struct Job {
    std::string name;
    std::function<planner::PlanOutcome()> run;
  };
  std::vector<Job> jobs;
  for (double t_sec : {30.0, 50.0, 100.0}) {
    for (auto mode : {planner::SystemMode::integrated, planner::SystemMode::separated}) {
      Scenario sc = base;
      sc.horizon_s = t_sec;
      const std::string name = std::string(mode == planner::SystemMode::integrated ? "int" : "sep") +
                               "_T" + std::to_string(static_cast<int>(t_sec));
      jobs.push_back({name, [sc, cfg, mode] { return planner::solve(sc, cfg, mode); }});
    }
  }
  for (auto kind : {baselines::BaselineKind::npc, baselines::BaselineKind::eta,
                    baselines::BaselineKind::circular, baselines::BaselineKind::static_ap}) {
    jobs.push_back({std::string(baselines::baseline_name(kind)) + "_T30",
                    [base, cfg, kind] { return baselines::run_baseline(kind, base, cfg); }});
  }

  // Two worker threads; scenarios are independent and inputs immutable.
  std::map<std::string, RefRun> results;
  std::mutex mu;
  std::size_t next = 0;
  auto worker = [&] {
    while (true) {
      std::size_t mine;
      {
        std::lock_guard lock(mu);
        if (next >= jobs.size()) return;
        mine = next++;
      }
      const auto out = jobs[mine].run();
      RefRun r;
      r.ok = out.ok;
      r.error = out.error;
      r.r_min = out.bundle.r_min;
      r.outer_iters = out.outer_iters;
      if (out.ok) {
        Scenario sc = base;
        const auto& name = jobs[mine].name;
        const auto pos = name.find("_T");
        sc.horizon_s = std::stod(name.substr(pos + 2));
        if (!feasibility::check(out.bundle, sc, 1e-6).ok) {
          r.ok = false;
          r.error = "feasibility gate";
        }
      }
      std::lock_guard lock(mu);
      results[jobs[mine].name] = r;
    }
  };
  std::thread w1(worker), w2(worker);
  w1.join();
  w2.join();

  for (const auto& [name, r] : results)
    c.require(r.ok, name + " failed: " + r.error);
  if (!c.pass) return c;

  auto val = [&](const std::string& name) { return results.at(name).r_min; };

  // (a) r_min non-decreasing in T for both modes.
  c.require(val("int_T50") >= val("int_T30") - 1e-9 && val("int_T100") >= val("int_T50") - 1e-9,
            "integrated r_min not non-decreasing in T");
  c.require(val("sep_T50") >= val("sep_T30") - 1e-9 && val("sep_T100") >= val("sep_T50") - 1e-9,
            "separated r_min not non-decreasing in T");

  // (b) scheme ordering at T = 30.
  auto ordered = [&](const std::string& hi, const std::string& lo) {
    c.require(val(hi) >= val(lo) - 1e-4,
              hi + " (" + fmt(val(hi)) + ") < " + lo + " (" + fmt(val(lo)) + ")");
  };
  ordered("sep_T30", "int_T30");
  ordered("int_T30", "npc_T30");
  ordered("int_T30", "eta_T30");
  ordered("npc_T30", "circular_T30");
  ordered("eta_T30", "circular_T30");
  ordered("circular_T30", "static_T30");

  // (c) separated exceeds integrated by at least 10% at T = 30.
  c.require(val("sep_T30") >= 1.10 * val("int_T30"),
            "separated gain at T=30 below 10%: sep " + fmt(val("sep_T30")) + " vs int " +
                fmt(val("int_T30")));

  // (d) outer-loop convergence within the expected iteration budget.
  for (const auto& t_tag : {"T30", "T50", "T100"}) {
    c.require(results.at(std::string("int_") + t_tag).outer_iters <= 5,
              std::string("integrated ") + t_tag + " used more than 5 outer iterations");
    c.require(results.at(std::string("sep_") + t_tag).outer_iters <= 10,
              std::string("separated ") + t_tag + " used more than 10 outer iterations");
  }

  std::string table;
  for (const auto& [name, r] : results) table += " " + name + "=" + fmt(r.r_min);
  c.detail = table;
  return c;
}

// ---- criterion 8: CLI determinism -------------------------------------------

Criterion criterion_8() {
  Criterion c;
  const fs::path tmp = fs::temp_directory_path() / "wpcn_acceptance_det";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  const std::string cfg = std::string(WPCN_SOURCE_DIR) + "/configs/small3.cfg";
  std::ostringstream log;
  const int rc1 = cli::run({"--config", cfg, "--out", (tmp / "a").string(), "--plot"}, log);
  const int rc2 = cli::run({"--config", cfg, "--out", (tmp / "b").string(), "--plot"}, log);
  c.require(rc1 == 0 && rc2 == 0, "cli runs failed");
  if (c.pass) {
    for (const char* name : {"trajectory.csv", "tau.csv", "power.csv", "rates.csv",
                             "convergence.csv", "summary.json", "trajectory.svg"}) {
      std::ifstream fa(tmp / "a" / name, std::ios::binary), fb(tmp / "b" / name, std::ios::binary);
      std::ostringstream sa, sb;
      sa << fa.rdbuf();
      sb << fb.rdbuf();
      if (sa.str() != sb.str()) c.require(false, std::string(name) + " differs between runs");
    }
  }
  fs::remove_all(tmp);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  struct Entry {
    int id;
    const char* name;
    double budget_s;
    Criterion (*fn)();
  };
  const std::vector<Entry> entries = {
      {1, "bound dominance and tightness", 5.0, criterion_1},
      {2, "derivative correctness", 5.0, criterion_2},
      {3, "LP oracle equivalence", 30.0, criterion_3},
      {4, "monotone convergence", 600.0, criterion_4},
      {5, "feasibility gate", 600.0, criterion_5},
      {6, "hover oracle", 120.0, criterion_6},
      {7, "trend reproduction", 1800.0, criterion_7},
      {8, "CLI determinism", 300.0, criterion_8},
  };
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

  bool all_pass = true;
  for (const auto& e : entries) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), e.id) == wanted.end()) continue;
    const double t0 = now_s();
    Criterion c = e.fn();
    const double dt = now_s() - t0;
    if (dt > e.budget_s) c.require(false, "runtime " + fmt(dt) + "s over budget " + fmt(e.budget_s) + "s");
    std::printf("[%s] criterion %d: %s (%.1fs)%s%s\n", c.pass ? "PASS" : "FAIL", e.id, e.name, dt,
                c.detail.empty() ? "" : " -- ", c.detail.c_str());
    std::fflush(stdout);
    all_pass &= c.pass;
  }
  return all_pass ? 0 : 1;
}
