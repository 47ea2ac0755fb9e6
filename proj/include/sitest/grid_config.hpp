#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sitest/csv.hpp"
#include "sitest/errors.hpp"
#include "sitest/mc_harness.hpp"

namespace sitest {

/*
 * Flat key-value experiment description, one `key = value` per line, `#` comments.
 *
 *   grid.d      list of dimensions            (required)
 *   grid.sigma  list of sigma values          (required)
 *   grid.theta  list of theta values          (required)
 *   grid.m      list of cell counts           (required)
 *   grid.mode   list of oracle|estimate       (required)
 *   n           sample size                   (default 1000)
 *   reps        replications per grid cell    (default 2000)
 *   level       nominal level                 (default 0.05)
 *   seed        master seed                   (default 1)
 *   ade.bandwidth_scale, ade.round_to_grid, ade.bandwidths
 *
 * Lists are comma separated.
 */
namespace detail {

inline std::vector<std::string_view> config_list(const std::string& key, const std::string& value) {
  auto items = split_commas(value);
  for (auto s : items) {
    if (s.empty()) throw ConfigError("config key '" + key + "': empty list element");
  }
  return items;
}

inline double config_real(const std::string& key, std::string_view s) {
  const auto v = parse_double(s);
  if (!v || !std::isfinite(*v)) {
    throw ConfigError("config key '" + key + "': '" + std::string(s) + "' is not a finite number");
  }
  return *v;
}

inline std::uint64_t config_count(const std::string& key, std::string_view s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("config key '" + key + "': '" + std::string(s) +
                      "' is not a non-negative integer");
  }
  return v;
}

inline bool config_bool(const std::string& key, std::string_view s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config key '" + key + "': '" + std::string(s) + "' is not a boolean");
}

}  // namespace detail

inline ExperimentGrid parse_grid_config(std::istream& in, const std::string& source = "<config>") {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key(detail::trim(body.substr(0, eq)));
    const std::string value(detail::trim(body.substr(eq + 1)));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    if (kv.contains(key)) throw ConfigError("config key '" + key + "': duplicated");
    kv[key] = value;
  }

  static const std::set<std::string> known{
      "grid.d", "grid.sigma", "grid.theta", "grid.m", "grid.mode", "n", "reps", "level", "seed",
      "ade.bandwidth_scale", "ade.round_to_grid", "ade.bandwidths", "cells.require_both_classes"};
  for (const auto& [k, v] : kv) {
    if (!known.contains(k)) throw ConfigError("config key '" + k + "': unknown key");
  }
  for (const char* req : {"grid.d", "grid.sigma", "grid.theta", "grid.m", "grid.mode"}) {
    if (!kv.contains(req)) throw ConfigError(std::string("config key '") + req + "': missing");
  }

  ExperimentGrid g;
  g.d.clear();
  g.sigma.clear();
  g.theta.clear();
  g.m.clear();
  g.modes.clear();
  for (auto s : detail::config_list("grid.d", kv["grid.d"])) {
    g.d.push_back(detail::config_count("grid.d", s));
  }
  for (auto s : detail::config_list("grid.sigma", kv["grid.sigma"])) {
    const double v = detail::config_real("grid.sigma", s);
    if (v < 0.0) throw ConfigError("config key 'grid.sigma': values must be >= 0");
    g.sigma.push_back(v);
  }
  for (auto s : detail::config_list("grid.theta", kv["grid.theta"])) {
    g.theta.push_back(detail::config_real("grid.theta", s));
  }
  for (auto s : detail::config_list("grid.m", kv["grid.m"])) {
    g.m.push_back(detail::config_count("grid.m", s));
  }
  for (auto s : detail::config_list("grid.mode", kv["grid.mode"])) {
    try {
      g.modes.push_back(parse_sim_mode(std::string(s)));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("config key 'grid.mode': ") + e.what());
    }
  }
  if (kv.contains("n")) g.n = detail::config_count("n", kv["n"]);
  if (kv.contains("reps")) g.reps = detail::config_count("reps", kv["reps"]);
  if (kv.contains("level")) g.level = detail::config_real("level", kv["level"]);
  if (kv.contains("seed")) g.seed = detail::config_count("seed", kv["seed"]);
  if (kv.contains("ade.bandwidth_scale")) {
    g.ade.bandwidth_scale = detail::config_real("ade.bandwidth_scale", kv["ade.bandwidth_scale"]);
    if (!(g.ade.bandwidth_scale > 0.0)) {
      throw ConfigError("config key 'ade.bandwidth_scale': must be positive");
    }
  }
  if (kv.contains("ade.round_to_grid")) {
    g.ade.round_to_grid = detail::config_bool("ade.round_to_grid", kv["ade.round_to_grid"]);
  }
  if (kv.contains("cells.require_both_classes")) {
    g.cell_rule = detail::config_bool("cells.require_both_classes", kv["cells.require_both_classes"])
                      ? CellRule::both_classes
                      : CellRule::nonempty;
  }
  if (kv.contains("ade.bandwidths")) {
    for (auto s : detail::config_list("ade.bandwidths", kv["ade.bandwidths"])) {
      const double h = detail::config_real("ade.bandwidths", s);
      if (!(h > 0.0)) throw ConfigError("config key 'ade.bandwidths': must be positive");
      g.ade.bandwidths.push_back(h);
    }
  }

  for (auto d : g.d) {
    if (d < 1) throw ConfigError("config key 'grid.d': values must be >= 1");
    if (!g.ade.bandwidths.empty() && g.ade.bandwidths.size() != d) {
      throw ConfigError("config key 'ade.bandwidths': needs one bandwidth per covariate");
    }
  }
  for (auto m : g.m) {
    if (m < 1) throw ConfigError("config key 'grid.m': values must be >= 1");
  }
  if (g.n < 2) throw ConfigError("config key 'n': must be >= 2");
  if (g.reps < 1) throw ConfigError("config key 'reps': must be >= 1");
  if (!(g.level > 0.0 && g.level < 1.0)) throw ConfigError("config key 'level': must lie in (0, 1)");
  return g;
}

inline ExperimentGrid load_grid_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_grid_config(in, path);
}

}  // namespace sitest
