#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "loadsim/action.hpp"
#include "loadsim/machine.hpp"
#include "loadsim/specs.hpp"
#include "loadsim/terrain.hpp"

namespace loadsim {

enum class LoadingPhase { Approach, Penetrate, Dig, Brake, Reverse, Done };

inline const char* to_string(LoadingPhase p) {
  switch (p) {
    case LoadingPhase::Approach: return "Approach";
    case LoadingPhase::Penetrate: return "Penetrate";
    case LoadingPhase::Dig: return "Dig";
    case LoadingPhase::Brake: return "Brake";
    case LoadingPhase::Reverse: return "Reverse";
    case LoadingPhase::Done: return "Done";
  }
  return "?";
}

// Why the dig phase ended; becomes the run's termination flag when the cycle
// finishes through Brake/Reverse/Done.
enum class DigOutcome { completed, stalled, breakout_early };

struct SimEvent {
  std::string name;
  double t = 0.0;
};

struct ControllerTuning {
  double contact_force_n = 1.0e3;
  double contact_proximity_m = 0.05;
  double breakout_clearance_m = 0.001;  // 1 mm hysteresis above the surface
  double stall_speed_ms = 0.01;
  double stall_rate_rps = 0.005;
  double stall_dwell_s = 2.0;
  // A cycle that reaches the pile footprint but never meets soil gives up
  // after this much extra travel and pulls out.
  double no_soil_advance_m = 2.0;
};

struct ControllerState {
  LoadingPhase phase = LoadingPhase::Approach;
  bool lift_latched = false;
  bool tilt_latched = false;
  bool boom_done = false;
  bool bucket_done = false;
  bool penetrated = false;       // cutting depth > 0 seen at least once
  bool reverse_breakout = false; // clear of the surface during pull-out
  double entry_x = 0.0;          // vehicle position at first contact
  double contact_t = -1.0;
  double brake_end_t = -1.0;
  int brake_counter = 0;
  int quiet_steps = 0;
  DigOutcome dig_outcome = DigOutcome::completed;
  std::vector<SimEvent> events;

  bool contacted() const { return contact_t >= 0.0; }
};

// True once the tip has cleared the local surface after having cut soil;
// the clearance adds 1 mm of hysteresis so surface grazing does not count.
inline bool detect_breakout(double tip_z, double surface_z, bool penetrated,
                            const ControllerTuning& tune = {}) {
  return penetrated && tip_z > surface_z + tune.breakout_clearance_m;
}

// Stall: vehicle and both joints essentially motionless for the full dwell.
class StallDetector {
 public:
  explicit StallDetector(const ControllerTuning& tune, double dt)
      : tune_(tune), dwell_steps_(static_cast<int>(std::lround(tune.stall_dwell_s / dt))) {}

  bool update(const MachineState& s) {
    const bool quiet = std::abs(s.v) < tune_.stall_speed_ms &&
                       std::abs(s.omega_boom) < tune_.stall_rate_rps &&
                       std::abs(s.omega_bucket) < tune_.stall_rate_rps;
    count_ = quiet ? count_ + 1 : 0;
    return count_ >= dwell_steps_;
  }

  int quiet_steps() const { return count_; }

 private:
  ControllerTuning tune_;
  int dwell_steps_;
  int count_ = 0;
};

namespace controller_detail {

inline void event(ControllerState& cs, const char* name, double t) {
  cs.events.push_back({name, t});
}

}  // namespace controller_detail

inline int stall_steps(const ControlConstants& k, const ControllerTuning& tune) {
  return static_cast<int>(std::lround(tune.stall_dwell_s / k.dt_s));
}

// One control decision at time t, given the machine state and the soil
// reaction from the previous step. Mutates the controller state (phase
// transitions, latches, event log) and returns actuator targets.
inline MachineCommands controller_step(ControllerState& cs, const MachineState& ms,
                                       const DigForce& dig, const PileState& pile,
                                       const ActionParams& a, const ControlConstants& k,
                                       const MachineSpec& spec, double t,
                                       const ControllerTuning& tune = {}) {
  using controller_detail::event;
  MachineCommands cmd;  // all targets default to 0, active

  const TipPose pose = bucket_tip_pose(ms, spec);
  const double surface = pile.surface_height(pose.tip.x);
  const double lift_rate = k.v_lift_max_ms / spec.lever_arm_m;
  const double tilt_rate = k.v_tilt_max_ms / spec.lever_arm_m;

  if (dig.depth > 0.0 && !cs.penetrated) {
    cs.penetrated = true;
    event(cs, "penetration", t);
  }

  for (;;) {
    switch (cs.phase) {
      case LoadingPhase::Approach: {
        // Proximity only counts against actual pile material, so a bucket
        // carried at ground level does not "contact" the flat approach floor.
        const bool near_pile =
            surface > 1e-3 &&
            (surface - pose.tip.z) >= -tune.contact_proximity_m;
        const bool contact = dig.magnitude > tune.contact_force_n ||
                             near_pile || pose.tip.x >= pile.spec().toe_x_m;
        if (contact) {
          cs.phase = LoadingPhase::Penetrate;
          cs.entry_x = ms.x;
          cs.contact_t = t;
          event(cs, "contact", t);
          continue;
        }
        cmd.drive.target_speed = a.alpha1 * k.v_drive_max_ms;
        return cmd;
      }

      case LoadingPhase::Penetrate:
      case LoadingPhase::Dig: {
        // Threshold latches on the total soil-reaction magnitude.
        if (!cs.lift_latched && dig.magnitude >= a.alpha3 * k.dig_force_ref_n) {
          cs.lift_latched = true;
          event(cs, "lift_latched", t);
          if (ms.theta_boom >= deg2rad(a.alpha7_deg)) {
            cs.boom_done = true;
            event(cs, "boom_target", t);
          }
        }
        if (!cs.tilt_latched && dig.magnitude >= a.alpha4 * k.dig_force_ref_n) {
          cs.tilt_latched = true;
          event(cs, "tilt_latched", t);
          if (ms.theta_bucket >= deg2rad(a.alpha8_deg)) {
            cs.bucket_done = true;
            event(cs, "bucket_target", t);
          }
        }
        if ((cs.lift_latched || cs.tilt_latched) && cs.phase == LoadingPhase::Penetrate) {
          cs.phase = LoadingPhase::Dig;
          event(cs, "dig", t);
        }
        if (cs.lift_latched && !cs.boom_done && ms.theta_boom >= deg2rad(a.alpha7_deg)) {
          cs.boom_done = true;
          event(cs, "boom_target", t);
        }
        if (cs.tilt_latched && !cs.bucket_done && ms.theta_bucket >= deg2rad(a.alpha8_deg)) {
          cs.bucket_done = true;
          event(cs, "bucket_target", t);
        }

        // Dig end: both targets reached, or an abort condition.
        const bool targets_met =
            cs.lift_latched && cs.tilt_latched && cs.boom_done && cs.bucket_done;
        const bool breakout = detect_breakout(pose.tip.z, surface, cs.penetrated, tune);
        const bool no_soil =
            !cs.penetrated && pose.tip.x > pile.spec().toe_x_m + tune.no_soil_advance_m;
        if (targets_met || breakout || no_soil || cs.quiet_steps >= stall_steps(k, tune)) {
          cs.dig_outcome = targets_met ? DigOutcome::completed
                          : (breakout || no_soil) ? DigOutcome::breakout_early
                                                  : DigOutcome::stalled;
          cs.phase = LoadingPhase::Brake;
          cs.brake_counter = 0;
          event(cs,
                targets_met ? "dig_complete"
                            : (breakout || no_soil) ? "breakout" : "stall",
                t);
          continue;
        }

        cmd.drive.target_speed = a.alpha2 * k.v_drive_max_ms;
        if (cs.lift_latched && !cs.boom_done)
          cmd.lift.target_speed = a.alpha5 * lift_rate;
        if (cs.tilt_latched && !cs.bucket_done)
          cmd.tilt.target_speed = a.alpha6 * tilt_rate;
        return cmd;
      }

      case LoadingPhase::Brake: {
        if (cs.brake_counter >= k.brake_steps()) {
          cs.phase = LoadingPhase::Reverse;
          cs.brake_end_t = t;
          event(cs, "brake_end", t);
          continue;
        }
        ++cs.brake_counter;
        return cmd;  // all targets zero
      }

      case LoadingPhase::Reverse: {
        if (cs.entry_x - ms.x >= k.reverse_distance_m) {
          cs.phase = LoadingPhase::Done;
          event(cs, "reverse_complete", t);
          continue;
        }
        if (!cs.reverse_breakout &&
            pose.tip.z > surface + tune.breakout_clearance_m) {
          cs.reverse_breakout = true;
          event(cs, "reverse_breakout", t);
        }
        cmd.drive.target_speed = -k.reverse_fraction * k.v_drive_max_ms;
        if (ms.theta_bucket < deg2rad(k.bucket_end_angle_deg))
          cmd.tilt.target_speed = k.reverse_fraction * tilt_rate;
        if (cs.reverse_breakout && ms.theta_boom < deg2rad(k.boom_end_angle_deg))
          cmd.lift.target_speed = k.reverse_fraction * lift_rate;
        return cmd;
      }

      case LoadingPhase::Done:
        return cmd;
    }
  }
}

// Updates the quiet-step counter used by the dig-phase stall abort; call once
// per step before controller_step.
inline void update_stall_counter(ControllerState& cs, const MachineState& ms,
                                 const ControllerTuning& tune = {}) {
  const bool quiet = std::abs(ms.v) < tune.stall_speed_ms &&
                     std::abs(ms.omega_boom) < tune.stall_rate_rps &&
                     std::abs(ms.omega_bucket) < tune.stall_rate_rps;
  const bool in_dig =
      cs.phase == LoadingPhase::Penetrate || cs.phase == LoadingPhase::Dig;
  cs.quiet_steps = (quiet && in_dig) ? cs.quiet_steps + 1 : 0;
}

}  // namespace loadsim
