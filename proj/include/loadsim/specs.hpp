#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "loadsim/errors.hpp"
#include "loadsim/soil.hpp"
#include "loadsim/units.hpp"

namespace loadsim {

// Planar wheel-loader description. Linear cylinder limits (speed in m/s,
// force in N) are mapped to joint space through a single effective lever arm.
struct MachineSpec {
  double operating_mass_kg = 15590.0;
  double wheelbase_m = 3.030;
  double bucket_capacity_m3 = 3.0;
  double bucket_width_m = 2.7;
  double wheel_radius_m = 0.65;
  double wheel_friction = 0.8;  // tire-ground Coulomb coefficient

  double drive_speed_max_kmh = 11.0;
  double drive_torque_limit_nm = 85.0e3;

  double lift_speed_min_ms = -0.20;
  double lift_speed_max_ms = 0.11;
  double lift_force_limit_n = 395.0e3;
  double tilt_speed_min_ms = -0.20;
  double tilt_speed_max_ms = 0.10;
  double tilt_force_limit_n = 530.0e3;
  double lever_arm_m = 0.5;  // cylinder-to-joint moment arm, both joints

  // Linkage geometry: boom pivot sits behind the front axle, above ground.
  // With the bucket flat on the ground the boom rests near -20.7 deg, so the
  // deepest boom targets (-40/-30 deg) are already satisfied at the start of
  // a dig and only the -20/-10 deg targets demand an actual lift.
  double boom_pivot_back_m = 1.0;
  double boom_pivot_height_m = 1.2;
  double boom_length_m = 2.2;
  double bucket_tip_offset_m = 1.2;

  double boom_inertia_kg_m2 = 25.0e3;
  double bucket_inertia_kg_m2 = 8.0e3;

  double drive_speed_max_ms() const { return kmh_to_ms(drive_speed_max_kmh); }
  double lift_rate_min() const { return lift_speed_min_ms / lever_arm_m; }
  double lift_rate_max() const { return lift_speed_max_ms / lever_arm_m; }
  double lift_torque_limit_nm() const { return lift_force_limit_n * lever_arm_m; }
  double tilt_rate_min() const { return tilt_speed_min_ms / lever_arm_m; }
  double tilt_rate_max() const { return tilt_speed_max_ms / lever_arm_m; }
  double tilt_torque_limit_nm() const { return tilt_force_limit_n * lever_arm_m; }

  // Largest longitudinal force the tires can transmit: engine torque at the
  // wheel rim capped by the friction circle.
  double traction_limit_n() const {
    return std::min(drive_torque_limit_nm / wheel_radius_m,
                    wheel_friction * operating_mass_kg * kGravity);
  }

  void validate() const {
    auto positive = [](double v, const char* what) {
      if (!(v > 0.0)) throw ConfigError(std::string("machine: ") + what + " must be > 0");
    };
    positive(operating_mass_kg, "operating_mass_kg");
    positive(wheelbase_m, "wheelbase_m");
    positive(bucket_capacity_m3, "bucket_capacity_m3");
    positive(bucket_width_m, "bucket_width_m");
    positive(wheel_radius_m, "wheel_radius_m");
    positive(wheel_friction, "wheel_friction");
    positive(drive_speed_max_kmh, "drive_speed_max_kmh");
    positive(drive_torque_limit_nm, "drive_torque_limit_nm");
    positive(lift_force_limit_n, "lift_force_limit_n");
    positive(tilt_force_limit_n, "tilt_force_limit_n");
    positive(lever_arm_m, "lever_arm_m");
    positive(boom_length_m, "boom_length_m");
    positive(bucket_tip_offset_m, "bucket_tip_offset_m");
    positive(boom_inertia_kg_m2, "boom_inertia_kg_m2");
    positive(bucket_inertia_kg_m2, "bucket_inertia_kg_m2");
    if (!(lift_speed_min_ms < 0.0 && lift_speed_max_ms > 0.0))
      throw ConfigError("machine: lift speed range must straddle zero");
    if (!(tilt_speed_min_ms < 0.0 && tilt_speed_max_ms > 0.0))
      throw ConfigError("machine: tilt speed range must straddle zero");
    if (boom_pivot_height_m <= 0.0)
      throw ConfigError("machine: boom_pivot_height_m must be > 0");
  }
};

// Fixed controller constants shared by every run of a campaign.
struct ControlConstants {
  double v_drive_max_ms = kmh_to_ms(11.0);
  double v_lift_max_ms = 0.11;   // cylinder-space cap for the lift target
  double v_tilt_max_ms = 0.10;
  double dig_force_ref_n = 100.0e3;  // F threshold scale for the alpha3/alpha4 latches
  double reverse_fraction = 0.6;     // of each max speed during pull-out
  double brake_duration_s = 1.0;
  double bucket_end_angle_deg = 50.0;
  double boom_end_angle_deg = -10.0;
  double reverse_distance_m = 5.0;
  double dt_s = 0.010;

  int brake_steps() const { return static_cast<int>(std::lround(brake_duration_s / dt_s)); }

  void validate() const {
    if (!(v_drive_max_ms > 0.0 && v_lift_max_ms > 0.0 && v_tilt_max_ms > 0.0))
      throw ConfigError("control: speed caps must be > 0");
    if (!(dig_force_ref_n > 0.0)) throw ConfigError("control: dig_force_ref_n must be > 0");
    if (!(reverse_fraction > 0.0 && reverse_fraction <= 1.0))
      throw ConfigError("control: reverse_fraction must be in (0, 1]");
    if (!(brake_duration_s > 0.0)) throw ConfigError("control: brake_duration_s must be > 0");
    if (!(reverse_distance_m > 0.0)) throw ConfigError("control: reverse_distance_m must be > 0");
    if (!(dt_s > 0.0 && dt_s <= 0.1)) throw ConfigError("control: dt_s must be in (0, 0.1]");
    if (!(bucket_end_angle_deg > 0.0))
      throw ConfigError("control: bucket_end_angle_deg must be > 0");
  }
};

// One pile instance: a soil, a face slope, and its placement on the 1D grid.
struct PileSpec {
  SoilSpec soil;
  double slope_deg = 30.0;
  double toe_x_m = 16.0;        // where the face begins
  // Plateau height behind the face. Sized against the linkage: the lift can
  // carry the tip over the crest mid-dig, so a cycle ends by climbing out of
  // the face rather than tunneling indefinitely.
  double crest_height_m = 2.0;
  double grid_dx_m = 0.2;

  // "gravel_30" style key used in manifests and result rows.
  std::string id() const {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%g", soil.name.c_str(), slope_deg);
    return buf;
  }

  double ramp_length_m() const { return crest_height_m / std::tan(deg2rad(slope_deg)); }

  void validate() const {
    soil.validate();
    if (!(slope_deg > 0.0 && slope_deg < 90.0))
      throw ConfigError("pile: slope_deg must be in (0, 90), got " + std::to_string(slope_deg));
    if (slope_deg > soil.phi_internal_deg + 1e-9)
      throw ConfigError("pile: slope_deg " + std::to_string(slope_deg) +
                        " exceeds repose angle of soil '" + soil.name + "'");
    if (!(toe_x_m > 0.0)) throw ConfigError("pile: toe_x_m must be > 0");
    if (!(crest_height_m > 0.0)) throw ConfigError("pile: crest_height_m must be > 0");
    if (!(grid_dx_m > 0.0 && grid_dx_m <= 1.0))
      throw ConfigError("pile: grid_dx_m must be in (0, 1]");
  }
};

}  // namespace loadsim
