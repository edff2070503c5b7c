#pragma once

// Run orchestration for the command-line tool: scenario ingestion, planner
// dispatch, CSV/JSON/SVG emission. Outputs are byte-identical across runs on
// identical inputs; timing goes to stdout only.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wpcn/baselines.hpp"
#include "wpcn/feasibility.hpp"
#include "wpcn/planner.hpp"
#include "wpcn/scenario_io.hpp"

namespace wpcn::cli {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct RunSummary {
  double r_min = 0.0;
  std::vector<double> per_gt_rates;
  int outer_iters = 0;
  int cccp_iters_total = 0;
  double wall_time_s = 0.0;  // reported on stdout, never serialized
  std::string input_hash;
  std::string mode;
  std::string scheme;
};

namespace detail {

inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Tracks created files so a failed run leaves no partial outputs behind.
class OutputStage {
 public:
  explicit OutputStage(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }
  std::ofstream open(const std::string& name) {
    const auto p = dir_ / name;
    created_.push_back(p);
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
  }
  void discard_all() {
    for (const auto& p : created_) {
      std::error_code ec;
      std::filesystem::remove(p, ec);
    }
  }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> created_;
};

inline void write_trajectory_csv(std::ofstream f, const SolutionBundle& b, const Scenario& sc) {
  f << "role,n,t_sec,x_m,y_m\n";
  const double delta = sc.slot_len_s();
  for (const auto& t : b.trajectories)
    for (int n = 1; n <= sc.slots; ++n)
      f << role_name(t.role) << ',' << n << ',' << num(n * delta) << ',' << num(t.pts[n - 1].x)
        << ',' << num(t.pts[n - 1].y) << '\n';
}

inline void write_tau_csv(std::ofstream f, const SolutionBundle& b, const Scenario& sc) {
  f << "n";
  for (std::size_t k = 0; k <= sc.num_gts(); ++k) f << ",tau_" << k;
  f << '\n';
  for (int n = 1; n <= sc.slots; ++n) {
    f << n;
    for (std::size_t k = 0; k <= sc.num_gts(); ++k) f << ',' << num(b.allocation.tau(n - 1, k));
    f << '\n';
  }
}

inline void write_power_csv(std::ofstream f, const SolutionBundle& b, const Scenario& sc) {
  f << "n";
  for (std::size_t k = 1; k <= sc.num_gts(); ++k) f << ",P_" << k;
  f << '\n';
  for (int n = 1; n <= sc.slots; ++n) {
    f << n;
    for (std::size_t k = 0; k < sc.num_gts(); ++k) f << ',' << num(b.powers.p_ul(n - 1, k));
    f << '\n';
  }
}

inline void write_rates_csv(std::ofstream f, const SolutionBundle& b) {
  f << "k,R_k\n";
  for (std::size_t k = 0; k < b.per_gt_rates.size(); ++k)
    f << (k + 1) << ',' << num(b.per_gt_rates[k]) << '\n';
}

inline void write_convergence_csv(std::ofstream f, const SolutionBundle& b) {
  f << "q,i,r_min\n";
  for (const auto& e : b.trace) f << e.outer << ',' << e.inner << ',' << num(e.r_min) << '\n';
}

inline void write_summary_json(std::ofstream f, const RunSummary& s, const Scenario& sc) {
  nlohmann::ordered_json j;
  j["scheme"] = s.scheme;
  j["mode"] = s.mode;
  j["r_min"] = s.r_min;
  j["per_gt_rates"] = s.per_gt_rates;
  j["outer_iterations"] = s.outer_iters;
  j["cccp_iterations_total"] = s.cccp_iters_total;
  j["input_hash"] = s.input_hash;
  j["T_seconds"] = sc.horizon_s;
  j["N_slots"] = sc.slots;
  j["K"] = sc.num_gts();
  f << j.dump(2) << '\n';
}

inline void write_svg(std::ofstream f, const SolutionBundle& b, const Scenario& sc) {
  double lo_x = sc.gts[0].x, hi_x = sc.gts[0].x, lo_y = sc.gts[0].y, hi_y = sc.gts[0].y;
  auto grow = [&](const Vec2& p) {
    lo_x = std::min(lo_x, p.x);
    hi_x = std::max(hi_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_y = std::max(hi_y, p.y);
  };
  for (const auto& u : sc.gts) grow(u);
  for (const auto& t : b.trajectories)
    for (const auto& p : t.pts) grow(p);
  const double pad = 0.08 * std::max({hi_x - lo_x, hi_y - lo_y, 1.0});
  lo_x -= pad, hi_x += pad, lo_y -= pad, hi_y += pad;
  const double w = hi_x - lo_x, h = hi_y - lo_y;
  const double sz = 640.0;
  auto px = [&](double x) { return (x - lo_x) / w * sz; };
  auto py = [&](double y) { return sz - (y - lo_y) / h * sz; };  // y grows upward

  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << sz << "\" height=\"" << sz
    << "\" viewBox=\"0 0 " << sz << ' ' << sz << "\">\n";
  f << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const double delta = sc.slot_len_s();
  const char* colors[] = {"#1f6fb2", "#b23a1f"};
  int ci = 0;
  for (const auto& t : b.trajectories) {
    const char* col = colors[ci++ % 2];
    f << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : t.pts) f << num(px(p.x)) << ',' << num(py(p.y)) << ' ';
    f << num(px(t.pts[0].x)) << ',' << num(py(t.pts[0].y));
    f << "\"/>\n";
    // Position markers sampled every 10 seconds.
    for (int n = 1; n <= sc.slots; ++n) {
      const double tsec = n * delta;
      const double r10 = std::fmod(tsec, 10.0);
      if (std::min(r10, 10.0 - r10) > 1e-9) continue;
      f << "<circle cx=\"" << num(px(t.pts[n - 1].x)) << "\" cy=\"" << num(py(t.pts[n - 1].y))
        << "\" r=\"4\" fill=\"" << col << "\"/>\n";
    }
    f << "<text x=\"10\" y=\"" << 18 * ci << "\" fill=\"" << col << "\" font-size=\"13\">"
      << role_name(t.role) << "</text>\n";
  }
  for (const auto& u : sc.gts)
    f << "<rect x=\"" << num(px(u.x) - 5) << "\" y=\"" << num(py(u.y) - 5)
      << "\" width=\"10\" height=\"10\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  f << "</svg>\n";
}

struct SchemeSpec {
  std::string name;  // proposed | static | circular | eta | npc
  std::optional<baselines::BaselineKind> baseline;
};

inline SchemeSpec parse_scheme(const std::string& s) {
  if (s == "proposed") return {s, std::nullopt};
  if (s == "static") return {s, baselines::BaselineKind::static_ap};
  if (s == "circular") return {s, baselines::BaselineKind::circular};
  if (s == "eta") return {s, baselines::BaselineKind::eta};
  if (s == "npc") return {s, baselines::BaselineKind::npc};
  throw io::ConfigError("unknown scheme: " + s);
}

inline planner::PlanOutcome dispatch(const SchemeSpec& scheme, const Scenario& sc,
                                     const planner::PlannerConfig& cfg, planner::SystemMode mode) {
  if (!scheme.baseline) return planner::solve(sc, cfg, mode);
  return baselines::run_baseline(*scheme.baseline, sc, cfg, mode);
}

// Runs one scenario and writes the full output set into `dir`.
inline RunSummary run_one(const SchemeSpec& scheme, const Scenario& sc,
                          const planner::PlannerConfig& cfg, planner::SystemMode mode,
                          OutputStage& stage, bool plot, const std::string& input_hash) {
  const auto t0 = std::chrono::steady_clock::now();
  planner::PlanOutcome outcome = dispatch(scheme, sc, cfg, mode);
  if (!outcome.ok) throw std::runtime_error("planner failed: " + outcome.error);
  const auto rep = feasibility::check(outcome.bundle, sc, 1e-6);
  if (!rep.ok) {
    std::string what = "solution failed the feasibility gate:";
    for (const auto& v : rep.violations)
      what += " [" + v.constraint + " n=" + std::to_string(v.slot) + " k=" + std::to_string(v.gt) +
              "]";
    throw std::runtime_error(what);
  }

  RunSummary s;
  s.r_min = outcome.bundle.r_min;
  s.per_gt_rates = outcome.bundle.per_gt_rates;
  s.outer_iters = outcome.outer_iters;
  s.cccp_iters_total = outcome.cccp_iters_total;
  s.input_hash = input_hash;
  s.mode = mode == planner::SystemMode::separated ? "separated" : "integrated";
  s.scheme = scheme.name;

  write_trajectory_csv(stage.open("trajectory.csv"), outcome.bundle, sc);
  write_tau_csv(stage.open("tau.csv"), outcome.bundle, sc);
  write_power_csv(stage.open("power.csv"), outcome.bundle, sc);
  write_rates_csv(stage.open("rates.csv"), outcome.bundle);
  write_convergence_csv(stage.open("convergence.csv"), outcome.bundle);
  write_summary_json(stage.open("summary.json"), s, sc);
  if (plot) write_svg(stage.open("trajectory.svg"), outcome.bundle, sc);

  s.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return s;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& log = std::cout) {
  CLI::App app{"max-min throughput planner for UAV-aided wireless powered networks"};
  std::string config_path, system = "integrated", scheme_name = "proposed", out_dir = "out";
  std::string sweep_t;
  bool plot = false;
  long seed = 0;
  app.add_option("--config", config_path, "scenario configuration file")->required();
  app.add_option("--system", system, "integrated | separated");
  app.add_option("--scheme", scheme_name, "proposed | static | circular | eta | npc");
  app.add_option("--out", out_dir, "output directory");
  app.add_flag("--plot", plot, "also emit trajectory.svg");
  app.add_option("--sweep-T", sweep_t, "comma-separated horizon list, e.g. \"30,50,100\"");
  app.add_option("--seed", seed, "reserved; runs are deterministic");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    log << "argument error: " << e.what() << '\n';
    return kExitConfig;
  }

  planner::SystemMode mode;
  if (system == "integrated")
    mode = planner::SystemMode::integrated;
  else if (system == "separated")
    mode = planner::SystemMode::separated;
  else {
    log << "config error: unknown system '" << system << "'\n";
    return kExitConfig;
  }

  io::ParsedScenario parsed;
  std::string input_hash;
  detail::SchemeSpec scheme;
  try {
    parsed = io::parse_scenario(config_path);
    std::ifstream f(config_path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    input_hash = detail::fnv1a_hex(ss.str());
    scheme = detail::parse_scheme(scheme_name);
  } catch (const io::ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  std::vector<double> sweep;
  if (!sweep_t.empty()) {
    std::istringstream ss(sweep_t);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        sweep.push_back(std::stod(item));
      } catch (const std::exception&) {
        log << "config error: bad --sweep-T entry '" << item << "'\n";
        return kExitConfig;
      }
      if (!(sweep.back() > 0)) {
        log << "config error: sweep horizons must be positive\n";
        return kExitConfig;
      }
    }
    std::sort(sweep.begin(), sweep.end());
    if (std::adjacent_find(sweep.begin(), sweep.end()) != sweep.end()) {
      log << "config error: duplicate sweep horizon\n";
      return kExitConfig;
    }
  }

  detail::OutputStage top(out_dir);
  try {
    if (sweep.empty()) {
      const auto s = detail::run_one(scheme, parsed.scenario, parsed.planner, mode, top, plot,
                                     input_hash);
      log << scheme_name << '/' << system << ": r_min = " << detail::num(s.r_min) << " bits/s/Hz ("
          << s.outer_iters << " outer iterations, " << s.wall_time_s << " s)\n";
    } else {
      std::vector<std::pair<double, double>> curve;
      for (double t_sec : sweep) {
        Scenario sc = parsed.scenario;
        sc.horizon_s = t_sec;
        char label[32];
        std::snprintf(label, sizeof label, "T%g", t_sec);
        detail::OutputStage sub(top.dir() / label);
        try {
          const auto s =
              detail::run_one(scheme, sc, parsed.planner, mode, sub, plot, input_hash);
          curve.emplace_back(t_sec, s.r_min);
          log << scheme_name << '/' << system << " T=" << t_sec
              << ": r_min = " << detail::num(s.r_min) << " (" << s.wall_time_s << " s)\n";
        } catch (...) {
          sub.discard_all();
          throw;
        }
      }
      auto f = top.open("rmin_vs_T.csv");
      f << "T_sec,r_min\n";
      for (const auto& [t_sec, r] : curve) f << detail::num(t_sec) << ',' << detail::num(r) << '\n';
    }
  } catch (const std::exception& e) {
    top.discard_all();
    log << "solver error: " << e.what() << '\n';
    return kExitSolver;
  }
  return kExitOk;
}

}  // namespace wpcn::cli
