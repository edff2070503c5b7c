#pragma once

// Scenario configuration files: a flat key = value format with one list key
// for the GT layout. Radio quantities enter in dB/dBm and are converted to
// linear SI units here, at the boundary; nothing past this file ever sees a
// decibel.

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "wpcn/planner.hpp"
#include "wpcn/types.hpp"

namespace wpcn::io {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParsedScenario {
  Scenario scenario;
  planner::PlannerConfig planner;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& text, int line, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": value of '" + key + "' is not a number");
  }
  if (trim(text.substr(used)) != "")
    throw ConfigError("line " + std::to_string(line) + ": trailing junk after '" + key + "'");
  return v;
}

// [[x1,y1],[x2,y2],...]
inline std::vector<Vec2> parse_points(const std::string& text, int line) {
  std::vector<Vec2> pts;
  std::string s = trim(text);
  if (s.size() < 2 || s.front() != '[' || s.back() != ']')
    throw ConfigError("line " + std::to_string(line) + ": gts must be a [[x,y],...] list");
  s = s.substr(1, s.size() - 2);
  std::size_t pos = 0;
  while (true) {
    const auto open = s.find('[', pos);
    if (open == std::string::npos) break;
    const auto close = s.find(']', open);
    if (close == std::string::npos)
      throw ConfigError("line " + std::to_string(line) + ": unterminated point in gts");
    std::string pair = s.substr(open + 1, close - open - 1);
    const auto comma = pair.find(',');
    if (comma == std::string::npos)
      throw ConfigError("line " + std::to_string(line) + ": point needs two coordinates");
    pts.push_back({parse_number(trim(pair.substr(0, comma)), line, "gts"),
                   parse_number(trim(pair.substr(comma + 1)), line, "gts")});
    pos = close + 1;
  }
  if (pts.empty()) throw ConfigError("line " + std::to_string(line) + ": gts list is empty");
  return pts;
}

}  // namespace detail

inline ParsedScenario parse_scenario_text(const std::string& text) {
  static const std::unordered_set<std::string> known = {
      "gts",          "T_seconds",     "N_slots",        "altitude_H_m",  "altitude_HI_m",
      "altitude_HE_m", "vmax_mps",     "vmax_I_mps",     "vmax_E_mps",    "p_dl_dbm",
      "p_ul_max_dbm", "zeta",          "eta",            "g0_db",         "noise_dbm",
      "cccp_tol",     "cccp_max_iter", "outer_tol",      "outer_max_iter", "barrier_tol"};

  std::unordered_map<std::string, std::pair<std::string, int>> kv;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    const std::string s = detail::trim(raw);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line) + ": expected key = value");
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string val = detail::trim(s.substr(eq + 1));
    if (!known.count(key))
      throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'");
    if (kv.count(key))
      throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + key + "'");
    kv[key] = {val, line};
  }

  auto require = [&](const std::string& key) -> std::pair<std::string, int> {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError("missing required key '" + key + "'");
    return it->second;
  };
  auto num = [&](const std::string& key) {
    auto [val, ln] = require(key);
    return detail::parse_number(val, ln, key);
  };
  auto opt_num = [&](const std::string& key, double dflt) {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    return detail::parse_number(it->second.first, it->second.second, key);
  };

  ParsedScenario out;
  Scenario& sc = out.scenario;
  {
    auto [val, ln] = require("gts");
    sc.gts = detail::parse_points(val, ln);
  }
  sc.horizon_s = num("T_seconds");
  const double n_slots = num("N_slots");
  if (n_slots < 2 || n_slots != std::floor(n_slots))
    throw ConfigError("line " + std::to_string(require("N_slots").second) +
                      ": N_slots must be an integer >= 2");
  sc.slots = static_cast<int>(n_slots);
  sc.alt_hybrid_m = num("altitude_H_m");
  sc.alt_info_m = opt_num("altitude_HI_m", sc.alt_hybrid_m);
  sc.alt_energy_m = opt_num("altitude_HE_m", sc.alt_hybrid_m);
  sc.vmax_hybrid_mps = num("vmax_mps");
  sc.vmax_info_mps = opt_num("vmax_I_mps", sc.vmax_hybrid_mps);
  sc.vmax_energy_mps = opt_num("vmax_E_mps", sc.vmax_hybrid_mps);
  sc.p_dl_w = dbm_to_watts(num("p_dl_dbm"));
  sc.p_ul_max_w = dbm_to_watts(num("p_ul_max_dbm"));
  sc.zeta = num("zeta");
  sc.eta = num("eta");
  sc.g0 = db_to_linear(num("g0_db"));
  sc.noise_w = dbm_to_watts(num("noise_dbm"));

  auto bad_range = [&](const std::string& key, const char* what) {
    auto it = kv.find(key);
    const int ln = it == kv.end() ? 0 : it->second.second;
    throw ConfigError("line " + std::to_string(ln) + ": " + what);
  };
  if (!(sc.zeta > 0.0 && sc.zeta <= 1.0)) bad_range("zeta", "zeta must lie in (0,1]");
  if (!(sc.eta > 0.0 && sc.eta <= 1.0)) bad_range("eta", "eta must lie in (0,1]");

  planner::PlannerConfig& pc = out.planner;
  pc.cccp_tol = opt_num("cccp_tol", pc.cccp_tol);
  pc.cccp_max_iter = static_cast<int>(opt_num("cccp_max_iter", pc.cccp_max_iter));
  pc.outer_tol = opt_num("outer_tol", pc.outer_tol);
  pc.outer_max_iter = static_cast<int>(opt_num("outer_max_iter", pc.outer_max_iter));
  pc.barrier_tol = opt_num("barrier_tol", pc.barrier_tol);

  try {
    sc.validate();
    pc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return out;
}

inline ParsedScenario parse_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_scenario_text(ss.str());
}

}  // namespace wpcn::io
