// Config parsing, defaults, soil resolution, and strict key checking.

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "loadsim/config.hpp"
#include "loadsim/units.hpp"

namespace fs = std::filesystem;
using namespace loadsim;
using nlohmann::json;

TEST(ConfigDefaults, MachineMatchesDataSheet) {
  const ResolvedConfig cfg = validate_config(json::object());
  const MachineSpec& m = cfg.machine;
  EXPECT_DOUBLE_EQ(m.operating_mass_kg, 15590.0);
  EXPECT_DOUBLE_EQ(m.wheelbase_m, 3.030);
  EXPECT_DOUBLE_EQ(m.bucket_capacity_m3, 3.0);
  EXPECT_DOUBLE_EQ(m.bucket_width_m, 2.7);
  EXPECT_DOUBLE_EQ(m.wheel_radius_m, 0.65);
  EXPECT_DOUBLE_EQ(m.wheel_friction, 0.8);
  EXPECT_DOUBLE_EQ(m.drive_speed_max_kmh, 11.0);
  EXPECT_DOUBLE_EQ(m.drive_torque_limit_nm, 85.0e3);
  EXPECT_DOUBLE_EQ(m.lift_speed_min_ms, -0.20);
  EXPECT_DOUBLE_EQ(m.lift_speed_max_ms, 0.11);
  EXPECT_DOUBLE_EQ(m.lift_force_limit_n, 395.0e3);
  EXPECT_DOUBLE_EQ(m.tilt_speed_min_ms, -0.20);
  EXPECT_DOUBLE_EQ(m.tilt_speed_max_ms, 0.10);
  EXPECT_DOUBLE_EQ(m.tilt_force_limit_n, 530.0e3);
  EXPECT_DOUBLE_EQ(m.lever_arm_m, 0.5);
}

// Speed ranges and force limits after unit conversion: km/h to m/s for the
// drive, cylinder force x lever arm for joint torques.
TEST(ConfigDefaults, UnitConversions) {
  const MachineSpec m = validate_config(json::object()).machine;
  EXPECT_NEAR(m.drive_speed_max_ms(), 11.0 / 3.6, 1e-12);
  EXPECT_NEAR(m.lift_torque_limit_nm(), 197.5e3, 1e-9);
  EXPECT_NEAR(m.tilt_torque_limit_nm(), 265.0e3, 1e-9);
  EXPECT_NEAR(m.lift_rate_min(), -0.40, 1e-12);
  EXPECT_NEAR(m.lift_rate_max(), 0.22, 1e-12);
  EXPECT_NEAR(m.tilt_rate_min(), -0.40, 1e-12);
  EXPECT_NEAR(m.tilt_rate_max(), 0.20, 1e-12);
  // Rim force 85e3/0.65 = 130.77 kN exceeds the friction circle
  // 0.8 * 15590 * 9.81 = 122.35 kN, so traction is friction-limited.
  EXPECT_NEAR(m.traction_limit_n(), 0.8 * 15590.0 * 9.81, 1e-6);
}

TEST(ConfigDefaults, ControlConstants) {
  const ControlConstants c = validate_config(json::object()).control;
  EXPECT_NEAR(c.v_drive_max_ms, 11.0 / 3.6, 1e-12);
  EXPECT_DOUBLE_EQ(c.v_lift_max_ms, 0.11);
  EXPECT_DOUBLE_EQ(c.v_tilt_max_ms, 0.10);
  EXPECT_DOUBLE_EQ(c.dt_s, 0.010);
  EXPECT_DOUBLE_EQ(c.brake_duration_s, 1.0);
  EXPECT_EQ(c.brake_steps(), 100);
  EXPECT_DOUBLE_EQ(c.reverse_fraction, 0.6);
  EXPECT_DOUBLE_EQ(c.reverse_distance_m, 5.0);
  EXPECT_DOUBLE_EQ(c.bucket_end_angle_deg, 50.0);
  EXPECT_DOUBLE_EQ(c.boom_end_angle_deg, -10.0);
}

TEST(ConfigDefaults, BuiltinSoils) {
  const ResolvedConfig cfg = validate_config(json::object());
  const SoilSpec& g = cfg.soil("gravel");
  EXPECT_DOUBLE_EQ(g.phi_internal_deg, 44.0);
  EXPECT_DOUBLE_EQ(g.psi_dilatancy_deg, 11.0);
  EXPECT_DOUBLE_EQ(g.cohesion_kpa, 0.0);
  EXPECT_DOUBLE_EQ(g.density_kg_m3, 1400.0);
  const SoilSpec& s = cfg.soil("sand");
  EXPECT_DOUBLE_EQ(s.phi_internal_deg, 39.0);
  EXPECT_DOUBLE_EQ(s.psi_dilatancy_deg, 9.0);
  EXPECT_DOUBLE_EQ(s.cohesion_kpa, 0.0);
  EXPECT_DOUBLE_EQ(s.density_kg_m3, 1400.0);
  const SoilSpec& d = cfg.soil("dirt");
  EXPECT_DOUBLE_EQ(d.phi_internal_deg, 40.0);
  EXPECT_DOUBLE_EQ(d.psi_dilatancy_deg, 13.0);
  EXPECT_DOUBLE_EQ(d.cohesion_kpa, 2.1);
  EXPECT_DOUBLE_EQ(d.density_kg_m3, 1400.0);
  EXPECT_THROW(cfg.soil("mud"), ConfigError);
}

TEST(ConfigDefaults, StockGridAndPileDefaults) {
  const ResolvedConfig cfg = validate_config(json::object());
  EXPECT_EQ(cfg.grid.size(), 45000u);
  EXPECT_DOUBLE_EQ(cfg.pile_defaults.toe_x_m, 16.0);
  EXPECT_DOUBLE_EQ(cfg.pile_defaults.grid_dx_m, 0.2);
  EXPECT_TRUE(cfg.piles.empty());
  const PileSpec p = cfg.make_pile("gravel", 30.0);
  EXPECT_DOUBLE_EQ(p.toe_x_m, 16.0);
  EXPECT_DOUBLE_EQ(p.grid_dx_m, 0.2);
  EXPECT_GT(p.crest_height_m, 0.0);
}

TEST(ConfigParse, UnknownKeysAreRejected) {
  EXPECT_THROW(validate_config(json{{"machin", json::object()}}), ConfigError);
  EXPECT_THROW(validate_config(json{{"machine", {{"mass_kg", 1.0}}}}), ConfigError);
  EXPECT_THROW(validate_config(json{{"control", {{"dt", 0.01}}}}), ConfigError);
  EXPECT_THROW(validate_config(json{{"grid", {{"alpha9", {1.0}}}}}), ConfigError);
  EXPECT_THROW(validate_config(json{{"pile_defaults", {{"toe_x", 10.0}}}}), ConfigError);
  EXPECT_THROW(
      validate_config(json{{"soils", {{"mud", {{"friction_deg", 30.0}}}}}}),
      ConfigError);
}

TEST(ConfigParse, TypeAndSchemaErrors) {
  EXPECT_THROW(validate_config(json::array()), ConfigError);
  EXPECT_THROW(validate_config(json{{"schema_version", 2}}), ConfigError);
  EXPECT_THROW(validate_config(json{{"schema_version", "one"}}), ConfigError);
  EXPECT_THROW(validate_config(json{{"machine", {{"wheelbase_m", "wide"}}}}), ConfigError);
  EXPECT_NO_THROW(validate_config(json{{"schema_version", 1}}));
}

TEST(ConfigParse, MachineOverrideAndValidation) {
  json doc{{"machine", {{"wheel_friction", 0.5}, {"bucket_capacity_m3", 2.0}}}};
  const ResolvedConfig cfg = validate_config(doc);
  EXPECT_DOUBLE_EQ(cfg.machine.wheel_friction, 0.5);
  EXPECT_DOUBLE_EQ(cfg.machine.bucket_capacity_m3, 2.0);
  EXPECT_DOUBLE_EQ(cfg.machine.operating_mass_kg, 15590.0);  // untouched default

  EXPECT_THROW(validate_config(json{{"machine", {{"wheel_radius_m", -0.1}}}}), ConfigError);
  EXPECT_THROW(validate_config(json{{"machine", {{"lift_speed_min_ms", 0.1}}}}), ConfigError);
}

TEST(ConfigParse, SoilOverrideAndValidation) {
  json doc{{"soils",
            {{"gravel", {{"phi_internal_deg", 35.0}, {"psi_dilatancy_deg", 5.0},
                         {"cohesion_kpa", 0.0}, {"density_kg_m3", 1600.0}}},
             {"clay", {{"phi_internal_deg", 25.0}, {"psi_dilatancy_deg", 0.0},
                       {"cohesion_kpa", 10.0}, {"density_kg_m3", 1800.0}}}}}};
  const ResolvedConfig cfg = validate_config(doc);
  EXPECT_DOUBLE_EQ(cfg.soil("gravel").phi_internal_deg, 35.0);  // user shadows builtin
  EXPECT_DOUBLE_EQ(cfg.soil("clay").cohesion_kpa, 10.0);
  EXPECT_DOUBLE_EQ(cfg.soil("sand").phi_internal_deg, 39.0);  // builtin untouched

  EXPECT_THROW(validate_config(json{{"soils", {{"bad", {{"phi_internal_deg", 30.0},
                                                        {"cohesion_kpa", -1.0},
                                                        {"density_kg_m3", 1400.0}}}}}}),
               ConfigError);
  EXPECT_THROW(validate_config(json{{"soils", {{"bad", {{"phi_internal_deg", 30.0},
                                                        {"psi_dilatancy_deg", 30.0},
                                                        {"density_kg_m3", 1400.0}}}}}}),
               ConfigError);
}

TEST(ConfigParse, GridOverrideIsValidatedAtConfigTime) {
  json doc{{"grid", {{"alpha1", {0.5}}, {"alpha8_deg", {30.0, 45.0}}}}};
  const ResolvedConfig cfg = validate_config(doc);
  EXPECT_EQ(cfg.grid.values[0], std::vector<double>{0.5});
  EXPECT_EQ(cfg.grid.size(), 1u * 3 * 5 * 5 * 5 * 5 * 4 * 2);

  // A value outside the action envelope must fail here, not mid-sweep.
  EXPECT_THROW(validate_config(json{{"grid", {{"alpha8_deg", {30.0, 60.0}}}}}), ConfigError);
  EXPECT_THROW(validate_config(json{{"grid", {{"alpha1", json::array()}}}}), ConfigError);
  EXPECT_THROW(validate_config(json{{"grid", {{"alpha1", {0.5, "x"}}}}}), ConfigError);
}

TEST(ConfigParse, ExplicitPileList) {
  json doc{{"pile_defaults", {{"toe_x_m", 12.0}}},
           {"piles", json::array({json{{"soil", "gravel"}, {"slope_deg", 35.0}},
                                  json{{"soil", "dirt"}, {"slope_deg", 30.0},
                                       {"crest_height_m", 3.0}}})}};
  const ResolvedConfig cfg = validate_config(doc);
  ASSERT_EQ(cfg.piles.size(), 2u);
  EXPECT_EQ(cfg.piles[0].id(), "gravel_35");
  EXPECT_DOUBLE_EQ(cfg.piles[0].toe_x_m, 12.0);  // pile_defaults applied
  EXPECT_DOUBLE_EQ(cfg.piles[1].crest_height_m, 3.0);

  EXPECT_THROW(validate_config(json{{"piles", json::array({json{{"slope_deg", 30.0}}})}}),
               ConfigError);
  EXPECT_THROW(validate_config(json{{"piles", json::array({json{{"soil", "gravel"}}})}}),
               ConfigError);
  // Slope above the soil's repose angle is impossible to build.
  EXPECT_THROW(
      validate_config(json{{"piles", json::array({json{{"soil", "sand"}, {"slope_deg", 45.0}}})}}),
      ConfigError);
}

TEST(ConfigFile, LoadsAndReportsErrors) {
  const fs::path dir = fs::temp_directory_path() / "loadsim_cfg_test";
  fs::create_directories(dir);
  const fs::path good = dir / "good.json";
  {
    std::ofstream out(good);
    out << R"({"machine": {"wheel_friction": 0.7}})";
  }
  EXPECT_DOUBLE_EQ(load_config_file(good).machine.wheel_friction, 0.7);

  const fs::path bad = dir / "bad.json";
  {
    std::ofstream out(bad);
    out << "{not json";
  }
  EXPECT_THROW(load_config_file(bad), ConfigError);
  EXPECT_THROW(load_config_file(dir / "missing.json"), ConfigError);
  fs::remove_all(dir);
}
