#pragma once

#include <algorithm>
#include <cmath>

#include "loadsim/specs.hpp"
#include "loadsim/terrain.hpp"
#include "loadsim/units.hpp"

namespace loadsim {

struct ActuatorCommand {
  double target_speed = 0.0;  // m/s for drive, rad/s for joints
  bool active = true;
};

struct MachineCommands {
  ActuatorCommand drive;
  ActuatorCommand lift;
  ActuatorCommand tilt;
};

struct MachineState {
  double x = 0.0;  // front axle position
  double v = 0.0;
  double theta_boom = 0.0;
  double omega_boom = 0.0;
  double theta_bucket = 0.0;
  double omega_bucket = 0.0;
  double bucket_load_mass = 0.0;
  double bucket_load_volume = 0.0;
  double work_j = 0.0;    // trapezoidally accumulated positive actuator work
  double power_w = 0.0;   // positive actuator power at this step's end state
  double f_drive_n = 0.0;       // traction force applied this step
  double tau_lift_nm = 0.0;     // boom joint torque applied this step
  double tau_tilt_nm = 0.0;     // bucket joint torque applied this step

  bool finite() const {
    for (double d : {x, v, theta_boom, omega_boom, theta_bucket, omega_bucket, work_j, power_w})
      if (!std::isfinite(d)) return false;
    return true;
  }
};

struct TipPose {
  Vec2 pivot;
  Vec2 boom_end;
  Vec2 tip;
  Vec2 edge_dir;  // unit vector along the cutting edge direction
};

// Planar two-link forward kinematics: boom pivot -> boom end -> bucket tip.
// At zero angles the chain points straight ahead along +x.
inline TipPose bucket_tip_pose(const MachineState& s, const MachineSpec& m) {
  TipPose p;
  p.pivot = {s.x - m.boom_pivot_back_m, m.boom_pivot_height_m};
  const double a_boom = s.theta_boom;
  const double a_tip = s.theta_boom + s.theta_bucket;
  p.boom_end = p.pivot + Vec2{m.boom_length_m * std::cos(a_boom),
                              m.boom_length_m * std::sin(a_boom)};
  p.tip = p.boom_end + Vec2{m.bucket_tip_offset_m * std::cos(a_tip),
                            m.bucket_tip_offset_m * std::sin(a_tip)};
  p.edge_dir = {std::cos(a_tip), std::sin(a_tip)};
  return p;
}

// Proportional speed servo with load feed-forward, saturated at the
// actuator's effort limit. At saturation the joint is force-limited and
// decelerates under load.
inline double actuator_force(const ActuatorCommand& cmd, double current_speed,
                             double load_force_estimate, double limit, double k_v) {
  if (!cmd.active) return 0.0;
  const double raw = k_v * (cmd.target_speed - current_speed) + load_force_estimate;
  return std::clamp(raw, -limit, limit);
}

// Bucket volume retained at a given bucket angle; tipping the bucket back
// holds more, up to a 10% overfill.
inline double carry_capacity(double theta_bucket_rad, double capacity_m3) {
  const double frac = std::clamp(0.3 + 0.7 * rad2deg(theta_bucket_rad) / 45.0, 0.0, 1.1);
  return capacity_m3 * frac;
}

struct DynamicsTuning {
  double k_v_drive = 60.0e3;       // N/(m/s)
  double k_v_joint = 800.0e3;      // Nm/(rad/s)
  double rolling_resistance = 0.03;
  double boom_min_rad = deg2rad(-45.0);
  double boom_max_rad = deg2rad(40.0);
  double bucket_min_rad = deg2rad(-60.0);
  double bucket_max_rad = deg2rad(65.0);
};

namespace machine_detail {

inline double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Applies a passive resistance increment to a speed: the resistance may slow
// the degree of freedom toward rest within the step, but it can neither push
// it through zero nor speed it up, and it cannot start motion from rest.
// This is the sliding-mode solution of the discontinuous drag law; without
// the projection a large resistance makes the integrator flip the velocity
// sign every step instead of sticking.
inline double apply_passive(double v_free, double dv_res) {
  if (v_free > 0.0) return std::max(0.0, v_free + std::min(dv_res, 0.0));
  if (v_free < 0.0) return std::min(0.0, v_free + std::max(dv_res, 0.0));
  return 0.0;
}

// Load feed-forward for the speed servos: compensate the part of the
// estimated external load that opposes the commanded direction, and the
// whole load when holding position (zero target). Load aligned with the
// command is never fed forward -- otherwise a stale estimate of a large
// resistance would drive the actuator against its own command.
inline double feedforward(double ext_load, double target_speed) {
  if (target_speed > 0.0) return -std::min(ext_load, 0.0);
  if (target_speed < 0.0) return -std::max(ext_load, 0.0);
  return -ext_load;
}

// Smallest boom angle >= lo that puts the tip at ground level; the chain is
// monotone in theta_boom over the mechanical range, so bisection suffices.
inline double boom_angle_for_ground(const MachineState& s, const MachineSpec& m, double lo,
                                    double hi) {
  MachineState probe = s;
  auto tip_z = [&](double th) {
    probe.theta_boom = th;
    return bucket_tip_pose(probe, m).tip.z;
  };
  if (tip_z(hi) < 0.0) return hi;  // even fully raised the tip is below ground
  double a = lo, b = hi;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (a + b);
    (tip_z(mid) < 0.0 ? a : b) = mid;
  }
  return b;
}

}  // namespace machine_detail

// One semi-implicit Euler step of the reduced loader: longitudinal dynamics
// with traction limit, then each joint driven by its speed servo. Servo and
// gravity terms integrate normally; the soil reaction is applied as a
// passive term per degree of freedom, so a wedged machine comes to rest
// (where the stall detector can see it) instead of chattering, and a
// saturated joint decelerates under load instead of being flung backwards.
inline MachineState step_dynamics(const MachineState& s, const MachineCommands& cmd,
                                  const DigForce& dig, double dt, const MachineSpec& m,
                                  const DynamicsTuning& tune = {}) {
  MachineState n = s;
  const double mass = m.operating_mass_kg;

  // --- drive ---
  const double roll_mag = tune.rolling_resistance * mass * kGravity;
  const double target_v = cmd.drive.active ? cmd.drive.target_speed : 0.0;
  const double ext_drive =
      -dig.horizontal -
      roll_mag * machine_detail::sign(target_v != 0.0 ? target_v : s.v);
  const double f_t = actuator_force(cmd.drive, s.v, machine_detail::feedforward(ext_drive, target_v),
                                    m.traction_limit_n(), tune.k_v_drive);
  const double v_servo = s.v + f_t / mass * dt;
  const double v_rolled = machine_detail::apply_passive(
      v_servo, -roll_mag * machine_detail::sign(v_servo) / mass * dt);
  n.v = machine_detail::apply_passive(v_rolled, -dig.horizontal / mass * dt);
  n.v = std::clamp(n.v, -m.drive_speed_max_ms(), m.drive_speed_max_ms());
  n.x = s.x + n.v * dt;
  n.f_drive_n = f_t;

  // --- joints ---
  const TipPose pose = bucket_tip_pose(s, m);
  const Vec2 f_dig{-dig.horizontal, dig.vertical};
  const Vec2 f_grav{0.0, -s.bucket_load_mass * kGravity};
  const double tau_dig_boom = cross2(pose.tip - pose.pivot, f_dig);
  const double tau_grav_boom = cross2(pose.tip - pose.pivot, f_grav);
  const double tau_dig_bucket = cross2(pose.tip - pose.boom_end, f_dig);
  const double tau_grav_bucket = cross2(pose.tip - pose.boom_end, f_grav);

  const double target_l = cmd.lift.active ? cmd.lift.target_speed : 0.0;
  const double tau_l = actuator_force(
      cmd.lift, s.omega_boom,
      machine_detail::feedforward(tau_grav_boom + tau_dig_boom, target_l),
      m.lift_torque_limit_nm(), tune.k_v_joint);
  const double wb_servo =
      s.omega_boom + (tau_l + tau_grav_boom) / m.boom_inertia_kg_m2 * dt;
  n.omega_boom = std::clamp(
      machine_detail::apply_passive(wb_servo, tau_dig_boom / m.boom_inertia_kg_m2 * dt),
      m.lift_rate_min(), m.lift_rate_max());
  n.theta_boom = s.theta_boom + n.omega_boom * dt;
  n.tau_lift_nm = tau_l;

  const double target_t = cmd.tilt.active ? cmd.tilt.target_speed : 0.0;
  const double tau_t = actuator_force(
      cmd.tilt, s.omega_bucket,
      machine_detail::feedforward(tau_grav_bucket + tau_dig_bucket, target_t),
      m.tilt_torque_limit_nm(), tune.k_v_joint);
  const double wk_servo =
      s.omega_bucket + (tau_t + tau_grav_bucket) / m.bucket_inertia_kg_m2 * dt;
  n.omega_bucket = std::clamp(
      machine_detail::apply_passive(wk_servo, tau_dig_bucket / m.bucket_inertia_kg_m2 * dt),
      m.tilt_rate_min(), m.tilt_rate_max());
  n.theta_bucket = s.theta_bucket + n.omega_bucket * dt;
  n.tau_tilt_nm = tau_t;

  // Mechanical stops.
  if (n.theta_boom < tune.boom_min_rad) { n.theta_boom = tune.boom_min_rad; n.omega_boom = 0.0; }
  if (n.theta_boom > tune.boom_max_rad) { n.theta_boom = tune.boom_max_rad; n.omega_boom = 0.0; }
  if (n.theta_bucket < tune.bucket_min_rad) {
    n.theta_bucket = tune.bucket_min_rad;
    n.omega_bucket = 0.0;
  }
  if (n.theta_bucket > tune.bucket_max_rad) {
    n.theta_bucket = tune.bucket_max_rad;
    n.omega_bucket = 0.0;
  }

  // Bedrock: the tip cannot pass below ground level; the boom takes the
  // constraint (bucket resting on the pit floor).
  if (bucket_tip_pose(n, m).tip.z < 0.0) {
    n.theta_boom =
        machine_detail::boom_angle_for_ground(n, m, n.theta_boom, tune.boom_max_rad);
    if (n.omega_boom < 0.0) n.omega_boom = 0.0;
  }

  // --- work accounting: positive actuator power only, trapezoidal in time ---
  const double p = std::max(f_t * n.v, 0.0) + std::max(tau_l * n.omega_boom, 0.0) +
                   std::max(tau_t * n.omega_bucket, 0.0);
  n.work_j = s.work_j + 0.5 * (s.power_w + p) * dt;
  n.power_w = p;
  return n;
}

}  // namespace loadsim
