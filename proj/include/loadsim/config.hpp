#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "loadsim/action.hpp"
#include "loadsim/errors.hpp"
#include "loadsim/soil.hpp"
#include "loadsim/specs.hpp"

namespace loadsim {

struct PileDefaults {
  double toe_x_m = 16.0;
  double crest_height_m = 2.0;
  double grid_dx_m = 0.2;
};

struct ResolvedConfig {
  int schema_version = 1;
  MachineSpec machine;
  ControlConstants control;
  std::map<std::string, SoilSpec> soils;  // builtins plus user additions
  ActionGridValues grid = ActionGridValues::stock();
  PileDefaults pile_defaults;
  std::vector<PileSpec> piles;  // optional explicit pile list

  const SoilSpec& soil(const std::string& name) const {
    auto it = soils.find(name);
    if (it == soils.end()) throw ConfigError("unknown soil '" + name + "'");
    return it->second;
  }

  PileSpec make_pile(const std::string& soil_name, double slope_deg) const {
    PileSpec p;
    p.soil = soil(soil_name);
    p.slope_deg = slope_deg;
    p.toe_x_m = pile_defaults.toe_x_m;
    p.crest_height_m = pile_defaults.crest_height_m;
    p.grid_dx_m = pile_defaults.grid_dx_m;
    p.validate();
    return p;
  }
};

namespace detail {

using json = nlohmann::json;

inline void check_keys(const json& obj, const std::set<std::string>& allowed,
                       const std::string& ctx) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key '" + ctx + it.key() + "'");
  }
}

inline double num(const json& obj, const std::string& key, double fallback,
                  const std::string& ctx) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError("config: '" + ctx + key + "' must be a number");
  return v.get<double>();
}

inline std::vector<double> num_list(const json& v, const std::string& ctx) {
  if (!v.is_array() || v.empty())
    throw ConfigError("config: '" + ctx + "' must be a non-empty array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError("config: '" + ctx + "' must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace detail

// Parses and fully validates a config document. Unknown keys are rejected so
// a typo cannot silently fall back to a default.
inline ResolvedConfig validate_config(const nlohmann::json& doc) {
  using detail::check_keys;
  using detail::num;

  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  check_keys(doc, {"schema_version", "machine", "control", "soils", "grid", "pile_defaults",
                   "piles"},
             "");

  ResolvedConfig cfg;
  for (const auto& s : {soil_gravel(), soil_sand(), soil_dirt()}) cfg.soils[s.name] = s;

  if (doc.contains("schema_version")) {
    if (!doc.at("schema_version").is_number_integer())
      throw ConfigError("config: 'schema_version' must be an integer");
    cfg.schema_version = doc.at("schema_version").get<int>();
    if (cfg.schema_version != 1)
      throw ConfigError("config: unsupported schema_version " +
                        std::to_string(cfg.schema_version));
  }

  if (doc.contains("machine")) {
    const auto& m = doc.at("machine");
    if (!m.is_object()) throw ConfigError("config: 'machine' must be an object");
    check_keys(m,
               {"operating_mass_kg", "wheelbase_m", "bucket_capacity_m3", "bucket_width_m",
                "wheel_radius_m", "wheel_friction", "drive_speed_max_kmh",
                "drive_torque_limit_nm", "lift_speed_min_ms", "lift_speed_max_ms",
                "lift_force_limit_n", "tilt_speed_min_ms", "tilt_speed_max_ms",
                "tilt_force_limit_n", "lever_arm_m", "boom_pivot_back_m", "boom_pivot_height_m",
                "boom_length_m", "bucket_tip_offset_m", "boom_inertia_kg_m2",
                "bucket_inertia_kg_m2"},
               "machine.");
    MachineSpec& ms = cfg.machine;
    ms.operating_mass_kg = num(m, "operating_mass_kg", ms.operating_mass_kg, "machine.");
    ms.wheelbase_m = num(m, "wheelbase_m", ms.wheelbase_m, "machine.");
    ms.bucket_capacity_m3 = num(m, "bucket_capacity_m3", ms.bucket_capacity_m3, "machine.");
    ms.bucket_width_m = num(m, "bucket_width_m", ms.bucket_width_m, "machine.");
    ms.wheel_radius_m = num(m, "wheel_radius_m", ms.wheel_radius_m, "machine.");
    ms.wheel_friction = num(m, "wheel_friction", ms.wheel_friction, "machine.");
    ms.drive_speed_max_kmh = num(m, "drive_speed_max_kmh", ms.drive_speed_max_kmh, "machine.");
    ms.drive_torque_limit_nm =
        num(m, "drive_torque_limit_nm", ms.drive_torque_limit_nm, "machine.");
    ms.lift_speed_min_ms = num(m, "lift_speed_min_ms", ms.lift_speed_min_ms, "machine.");
    ms.lift_speed_max_ms = num(m, "lift_speed_max_ms", ms.lift_speed_max_ms, "machine.");
    ms.lift_force_limit_n = num(m, "lift_force_limit_n", ms.lift_force_limit_n, "machine.");
    ms.tilt_speed_min_ms = num(m, "tilt_speed_min_ms", ms.tilt_speed_min_ms, "machine.");
    ms.tilt_speed_max_ms = num(m, "tilt_speed_max_ms", ms.tilt_speed_max_ms, "machine.");
    ms.tilt_force_limit_n = num(m, "tilt_force_limit_n", ms.tilt_force_limit_n, "machine.");
    ms.lever_arm_m = num(m, "lever_arm_m", ms.lever_arm_m, "machine.");
    ms.boom_pivot_back_m = num(m, "boom_pivot_back_m", ms.boom_pivot_back_m, "machine.");
    ms.boom_pivot_height_m = num(m, "boom_pivot_height_m", ms.boom_pivot_height_m, "machine.");
    ms.boom_length_m = num(m, "boom_length_m", ms.boom_length_m, "machine.");
    ms.bucket_tip_offset_m = num(m, "bucket_tip_offset_m", ms.bucket_tip_offset_m, "machine.");
    ms.boom_inertia_kg_m2 = num(m, "boom_inertia_kg_m2", ms.boom_inertia_kg_m2, "machine.");
    ms.bucket_inertia_kg_m2 =
        num(m, "bucket_inertia_kg_m2", ms.bucket_inertia_kg_m2, "machine.");
  }
  cfg.machine.validate();

  if (doc.contains("control")) {
    const auto& c = doc.at("control");
    if (!c.is_object()) throw ConfigError("config: 'control' must be an object");
    check_keys(c,
               {"v_drive_max_ms", "v_lift_max_ms", "v_tilt_max_ms", "dig_force_ref_n",
                "reverse_fraction", "brake_duration_s", "bucket_end_angle_deg",
                "boom_end_angle_deg", "reverse_distance_m", "dt_s"},
               "control.");
    ControlConstants& cc = cfg.control;
    cc.v_drive_max_ms = num(c, "v_drive_max_ms", cc.v_drive_max_ms, "control.");
    cc.v_lift_max_ms = num(c, "v_lift_max_ms", cc.v_lift_max_ms, "control.");
    cc.v_tilt_max_ms = num(c, "v_tilt_max_ms", cc.v_tilt_max_ms, "control.");
    cc.dig_force_ref_n = num(c, "dig_force_ref_n", cc.dig_force_ref_n, "control.");
    cc.reverse_fraction = num(c, "reverse_fraction", cc.reverse_fraction, "control.");
    cc.brake_duration_s = num(c, "brake_duration_s", cc.brake_duration_s, "control.");
    cc.bucket_end_angle_deg = num(c, "bucket_end_angle_deg", cc.bucket_end_angle_deg, "control.");
    cc.boom_end_angle_deg = num(c, "boom_end_angle_deg", cc.boom_end_angle_deg, "control.");
    cc.reverse_distance_m = num(c, "reverse_distance_m", cc.reverse_distance_m, "control.");
    cc.dt_s = num(c, "dt_s", cc.dt_s, "control.");
  }
  cfg.control.validate();

  if (doc.contains("soils")) {
    const auto& soils = doc.at("soils");
    if (!soils.is_object()) throw ConfigError("config: 'soils' must be an object");
    for (auto it = soils.begin(); it != soils.end(); ++it) {
      const std::string ctx = "soils." + it.key() + ".";
      if (!it.value().is_object())
        throw ConfigError("config: '" + ctx + "' must be an object");
      check_keys(it.value(),
                 {"phi_internal_deg", "psi_dilatancy_deg", "cohesion_kpa", "density_kg_m3"},
                 ctx);
      SoilSpec s;
      s.name = it.key();
      s.phi_internal_deg = num(it.value(), "phi_internal_deg", 0.0, ctx);
      s.psi_dilatancy_deg = num(it.value(), "psi_dilatancy_deg", 0.0, ctx);
      s.cohesion_kpa = num(it.value(), "cohesion_kpa", 0.0, ctx);
      s.density_kg_m3 = num(it.value(), "density_kg_m3", 0.0, ctx);
      s.validate();
      cfg.soils[s.name] = s;  // user soils may shadow builtins
    }
  }

  if (doc.contains("grid")) {
    const auto& g = doc.at("grid");
    if (!g.is_object()) throw ConfigError("config: 'grid' must be an object");
    static const char* kAlphaKeys[8] = {"alpha1", "alpha2", "alpha3", "alpha4",
                                        "alpha5", "alpha6", "alpha7_deg", "alpha8_deg"};
    check_keys(g, {kAlphaKeys, kAlphaKeys + 8}, "grid.");
    for (int i = 0; i < 8; ++i) {
      if (g.contains(kAlphaKeys[i]))
        cfg.grid.values[i] = detail::num_list(g.at(kAlphaKeys[i]), "grid." + std::string(kAlphaKeys[i]));
    }
  }

  if (doc.contains("pile_defaults")) {
    const auto& p = doc.at("pile_defaults");
    if (!p.is_object()) throw ConfigError("config: 'pile_defaults' must be an object");
    check_keys(p, {"toe_x_m", "crest_height_m", "grid_dx_m"}, "pile_defaults.");
    cfg.pile_defaults.toe_x_m = num(p, "toe_x_m", cfg.pile_defaults.toe_x_m, "pile_defaults.");
    cfg.pile_defaults.crest_height_m =
        num(p, "crest_height_m", cfg.pile_defaults.crest_height_m, "pile_defaults.");
    cfg.pile_defaults.grid_dx_m =
        num(p, "grid_dx_m", cfg.pile_defaults.grid_dx_m, "pile_defaults.");
  }

  if (doc.contains("piles")) {
    const auto& arr = doc.at("piles");
    if (!arr.is_array()) throw ConfigError("config: 'piles' must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string ctx = "piles[" + std::to_string(i) + "].";
      const auto& e = arr.at(i);
      if (!e.is_object()) throw ConfigError("config: '" + ctx + "' must be an object");
      check_keys(e, {"soil", "slope_deg", "toe_x_m", "crest_height_m", "grid_dx_m"}, ctx);
      if (!e.contains("soil") || !e.at("soil").is_string())
        throw ConfigError("config: '" + ctx + "soil' must be a string");
      if (!e.contains("slope_deg"))
        throw ConfigError("config: '" + ctx + "slope_deg' is required");
      PileSpec p;
      p.soil = cfg.soil(e.at("soil").get<std::string>());
      p.slope_deg = num(e, "slope_deg", 0.0, ctx);
      p.toe_x_m = num(e, "toe_x_m", cfg.pile_defaults.toe_x_m, ctx);
      p.crest_height_m = num(e, "crest_height_m", cfg.pile_defaults.crest_height_m, ctx);
      p.grid_dx_m = num(e, "grid_dx_m", cfg.pile_defaults.grid_dx_m, ctx);
      p.validate();
      cfg.piles.push_back(std::move(p));
    }
  }

  // Grid values must be valid actions; fail at config time, not mid-sweep.
  for (std::size_t i = 0; i < cfg.grid.values.size(); ++i) {
    if (cfg.grid.values[i].empty())
      throw ConfigError("config: grid.alpha" + std::to_string(i + 1) + " is empty");
  }
  ActionParams probe;
  for (int i = 0; i < 8; ++i) {
    auto arr = probe.as_array();
    for (double v : cfg.grid.values[i]) {
      arr[i] = v;
      ActionParams::from_array(arr).validate();
    }
  }

  return cfg;
}

inline ResolvedConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return validate_config(doc);
}

}  // namespace loadsim
