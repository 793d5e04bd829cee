// Loading-cycle state machine: contact detection, threshold latches, brake
// timing, reverse logic, breakout and stall aborts.

#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "loadsim/controller.hpp"
#include "loadsim/soil.hpp"

using namespace loadsim;

namespace {

PileSpec gravel_spec() {
  PileSpec p;
  p.soil = soil_gravel();
  p.slope_deg = 30.0;
  p.toe_x_m = 16.0;
  p.crest_height_m = 2.0;
  p.grid_dx_m = 0.2;
  return p;
}

// Places the bucket tip at (tip_x, tip_z) with the bucket link level
// (theta_bucket = 0), solving the boom angle for the requested height.
MachineState tip_at(double tip_x, double tip_z, const MachineSpec& m = {}) {
  MachineState s;
  const double reach = m.boom_length_m + m.bucket_tip_offset_m;
  s.theta_boom = std::asin((tip_z - m.boom_pivot_height_m) / reach);
  s.theta_bucket = 0.0;
  s.x = tip_x + m.boom_pivot_back_m - reach * std::cos(s.theta_boom);
  return s;
}

bool has_event(const ControllerState& cs, const std::string& name) {
  for (const auto& e : cs.events)
    if (e.name == name) return true;
  return false;
}

}  // namespace

TEST(Approach, DrivesAtCommandedFractionUntilContact) {
  PileState pile(gravel_spec(), 2.7, 40.0);
  const MachineSpec spec;
  const ControlConstants k;
  ControllerState cs;
  const MachineState ms = tip_at(8.0, 0.0);
  const DigForce none{};

  const MachineCommands cmd = controller_step(cs, ms, none, pile, ActionParams{}, k, spec, 0.0);
  EXPECT_EQ(cs.phase, LoadingPhase::Approach);
  EXPECT_NEAR(cmd.drive.target_speed, 0.6 * k.v_drive_max_ms, 1e-12);
  EXPECT_DOUBLE_EQ(cmd.lift.target_speed, 0.0);
  EXPECT_DOUBLE_EQ(cmd.tilt.target_speed, 0.0);
  EXPECT_FALSE(cs.contacted());
}

// A bucket carried at floor level must not register contact with the flat
// approach floor: proximity only counts against pile material.
TEST(Approach, NoFalseContactOnFlatFloor) {
  PileState pile(gravel_spec(), 2.7, 40.0);
  const ControlConstants k;
  ControllerState cs;
  const MachineState ms = tip_at(10.0, 0.0);  // tip scraping the floor, 6 m before the toe
  controller_step(cs, ms, DigForce{}, pile, ActionParams{}, k, MachineSpec{}, 0.0);
  EXPECT_EQ(cs.phase, LoadingPhase::Approach);
}

TEST(Contact, TriggersOnForceProximityOrToeCrossing) {
  const PileSpec spec = gravel_spec();
  const ControlConstants k;
  const MachineSpec machine;

  // Force above 1 kN.
  {
    PileState pile(spec, 2.7, 40.0);
    ControllerState cs;
    DigForce f{};
    f.magnitude = 1.5e3;
    const MachineState ms = tip_at(14.0, 0.3);
    controller_step(cs, ms, f, pile, ActionParams{}, k, machine, 3.25);
    EXPECT_TRUE(cs.contacted());
    EXPECT_DOUBLE_EQ(cs.contact_t, 3.25);
    EXPECT_DOUBLE_EQ(cs.entry_x, ms.x);
    EXPECT_TRUE(has_event(cs, "contact"));
  }
  // Proximity to actual material: the first face column shows a small
  // positive surface just before the toe; hovering within 5 cm counts.
  {
    PileState pile(spec, 2.7, 40.0);
    ASSERT_GT(pile.surface_height(15.95), 1e-3);
    ControllerState cs;
    controller_step(cs, tip_at(15.95, 0.05), DigForce{}, pile, ActionParams{}, k, machine, 0.0);
    EXPECT_TRUE(cs.contacted());
  }
  // Same spot but hovering high: no contact.
  {
    PileState pile(spec, 2.7, 40.0);
    ControllerState cs;
    controller_step(cs, tip_at(15.95, 0.30), DigForce{}, pile, ActionParams{}, k, machine, 0.0);
    EXPECT_FALSE(cs.contacted());
  }
  // Crossing the toe line triggers regardless of force.
  {
    PileState pile(spec, 2.7, 40.0);
    ControllerState cs;
    controller_step(cs, tip_at(16.05, 0.8), DigForce{}, pile, ActionParams{}, k, machine, 0.0);
    EXPECT_TRUE(cs.contacted());
  }
}

// Zero thresholds latch both joints in the very step that makes contact.
TEST(Latches, ZeroThresholdsLatchAtFirstContact) {
  PileState pile(gravel_spec(), 2.7, 40.0);
  const ControlConstants k;
  const MachineSpec machine;
  ControllerState cs;
  ActionParams a;
  a.alpha3 = 0.0;
  a.alpha4 = 0.0;
  a.alpha7_deg = -10.0;  // deeper than the resting boom angle: lift needed
  a.alpha8_deg = 45.0;
  a.alpha5 = 0.8;
  a.alpha6 = 0.4;

  MachineState ms = tip_at(16.05, 0.1);
  ASSERT_LT(ms.theta_boom, deg2rad(a.alpha7_deg));
  const MachineCommands cmd = controller_step(cs, ms, DigForce{}, pile, a, k, machine, 1.0);

  EXPECT_EQ(cs.phase, LoadingPhase::Dig);
  EXPECT_TRUE(cs.lift_latched);
  EXPECT_TRUE(cs.tilt_latched);
  EXPECT_FALSE(cs.boom_done);
  EXPECT_FALSE(cs.bucket_done);
  EXPECT_TRUE(has_event(cs, "lift_latched"));
  EXPECT_TRUE(has_event(cs, "tilt_latched"));
  EXPECT_TRUE(has_event(cs, "dig"));
  // Dig commands: drive at alpha2, joints at their commanded fractions.
  EXPECT_NEAR(cmd.drive.target_speed, a.alpha2 * k.v_drive_max_ms, 1e-12);
  EXPECT_NEAR(cmd.lift.target_speed, a.alpha5 * k.v_lift_max_ms / machine.lever_arm_m, 1e-12);
  EXPECT_NEAR(cmd.tilt.target_speed, a.alpha6 * k.v_tilt_max_ms / machine.lever_arm_m, 1e-12);
}

TEST(Latches, ThresholdsGateOnForceMagnitude) {
  PileState pile(gravel_spec(), 2.7, 40.0);
  const ControlConstants k;
  ControllerState cs;
  ActionParams a;
  a.alpha3 = 0.6;      // 60 kN at the 100 kN reference
  a.alpha4 = 1.2;      // 120 kN
  a.alpha7_deg = -10.0;  // above the resting boom angle so the lift has work

  MachineState ms = tip_at(16.5, 0.2);
  DigForce f{};
  f.magnitude = 30.0e3;
  controller_step(cs, ms, f, pile, a, k, MachineSpec{}, 0.0);
  EXPECT_TRUE(cs.contacted());
  EXPECT_FALSE(cs.lift_latched);
  EXPECT_FALSE(cs.tilt_latched);
  EXPECT_EQ(cs.phase, LoadingPhase::Penetrate);

  f.magnitude = 70.0e3;  // above alpha3, below alpha4
  const MachineCommands cmd = controller_step(cs, ms, f, pile, a, k, MachineSpec{}, 0.01);
  EXPECT_TRUE(cs.lift_latched);
  EXPECT_FALSE(cs.tilt_latched);
  EXPECT_EQ(cs.phase, LoadingPhase::Dig);
  EXPECT_GT(cmd.lift.target_speed, 0.0);
  EXPECT_DOUBLE_EQ(cmd.tilt.target_speed, 0.0);

  f.magnitude = 130.0e3;
  controller_step(cs, ms, f, pile, a, k, MachineSpec{}, 0.02);
  EXPECT_TRUE(cs.tilt_latched);
}

// Angle targets are plain comparisons, independent of when the latch fired:
// a boom already above its target is done the moment the latch engages.
TEST(Latches, TargetAlreadyMetAtLatchTime) {
  PileState pile(gravel_spec(), 2.7, 40.0);
  const ControlConstants k;
  ControllerState cs;
  ActionParams a;
  a.alpha3 = 0.0;
  a.alpha4 = 0.0;
  a.alpha7_deg = -40.0;  // resting boom (~ -20.7 deg) is already above this
  a.alpha8_deg = 30.0;

  const MachineState ms = tip_at(16.05, 0.1);
  ASSERT_GT(ms.theta_boom, deg2rad(-40.0));
  const MachineCommands cmd = controller_step(cs, ms, DigForce{}, pile, a, k, MachineSpec{}, 0.0);
  EXPECT_TRUE(cs.boom_done);
  EXPECT_TRUE(has_event(cs, "boom_target"));
  EXPECT_DOUBLE_EQ(cmd.lift.target_speed, 0.0);  // nothing left for the lift to do
  EXPECT_FALSE(cs.bucket_done);
  EXPECT_GT(cmd.tilt.target_speed, 0.0);
}

TEST(Brake, LastsExactlyTheConfiguredStepCount) {
  PileState pile(gravel_spec(), 2.7, 40.0);
  const ControlConstants k;
  ASSERT_EQ(k.brake_steps(), 100);
  const MachineSpec machine;
  ControllerState cs;
  ActionParams a;
  a.alpha3 = a.alpha4 = 0.0;
  a.alpha7_deg = -40.0;
  a.alpha8_deg = 30.0;

  // Bucket already curled past target: the dig completes on the contact step,
  // and that same decision already holds the machine for brake step one.
  MachineState ms = tip_at(16.05, 0.1);
  ms.theta_bucket = deg2rad(31.0);
  const MachineCommands first = controller_step(cs, ms, DigForce{}, pile, a, k, machine, 0.0);
  ASSERT_EQ(cs.phase, LoadingPhase::Brake);
  ASSERT_EQ(cs.dig_outcome, DigOutcome::completed);
  ASSERT_TRUE(has_event(cs, "dig_complete"));
  EXPECT_DOUBLE_EQ(first.drive.target_speed, 0.0);

  int zero_cmd_steps = 1;
  double t = 0.01;
  while (cs.phase == LoadingPhase::Brake) {
    const MachineCommands cmd = controller_step(cs, ms, DigForce{}, pile, a, k, machine, t);
    if (cs.phase == LoadingPhase::Brake) {
      ++zero_cmd_steps;
      EXPECT_DOUBLE_EQ(cmd.drive.target_speed, 0.0);
      EXPECT_DOUBLE_EQ(cmd.lift.target_speed, 0.0);
      EXPECT_DOUBLE_EQ(cmd.tilt.target_speed, 0.0);
    }
    t += k.dt_s;
    ASSERT_LT(t, 10.0);
  }
  EXPECT_EQ(zero_cmd_steps, 100);
  EXPECT_EQ(cs.phase, LoadingPhase::Reverse);
  EXPECT_TRUE(has_event(cs, "brake_end"));
}

TEST(Reverse, BacksOutAtFixedFractionAndStopsAtDistance) {
  PileState pile(gravel_spec(), 2.7, 40.0);
  const ControlConstants k;
  const MachineSpec machine;
  ControllerState cs;
  cs.phase = LoadingPhase::Reverse;
  cs.entry_x = 20.0;
  cs.penetrated = true;

  // Still short of the pull-back distance: keep reversing.
  MachineState ms = tip_at(18.0, 0.5);
  ms.x = 15.01;
  MachineCommands cmd = controller_step(cs, ms, DigForce{}, pile, ActionParams{}, k, machine, 30.0);
  EXPECT_EQ(cs.phase, LoadingPhase::Reverse);
  EXPECT_NEAR(cmd.drive.target_speed, -0.6 * k.v_drive_max_ms, 1e-12);

  // Exactly at the distance: done, everything stops.
  ms.x = 15.0;
  cmd = controller_step(cs, ms, DigForce{}, pile, ActionParams{}, k, machine, 30.1);
  EXPECT_EQ(cs.phase, LoadingPhase::Done);
  EXPECT_TRUE(has_event(cs, "reverse_complete"));
  EXPECT_DOUBLE_EQ(cmd.drive.target_speed, 0.0);
}

TEST(Reverse, CurlsImmediatelyButLiftsOnlyAfterBreakout) {
  PileState pile(gravel_spec(), 2.7, 40.0);
  const ControlConstants k;
  const MachineSpec machine;
  ControllerState cs;
  cs.phase = LoadingPhase::Reverse;
  cs.penetrated = true;

  // Tip buried in the face: curl toward the carry angle, no lift yet.
  MachineState buried = tip_at(20.0, 0.5);
  cs.entry_x = buried.x + 1.0;  // pull-out has 4 more metres to go
  ASSERT_LT(0.5, pile.surface_height(20.0));
  MachineCommands cmd =
      controller_step(cs, buried, DigForce{}, pile, ActionParams{}, k, machine, 30.0);
  EXPECT_EQ(cs.phase, LoadingPhase::Reverse);
  EXPECT_FALSE(cs.reverse_breakout);
  EXPECT_NEAR(cmd.tilt.target_speed, 0.6 * k.v_tilt_max_ms / machine.lever_arm_m, 1e-12);
  EXPECT_DOUBLE_EQ(cmd.lift.target_speed, 0.0);

  // Tip clear of the shallow face with the boom still lowered: the lift
  // engages and raises toward the carry angle.
  MachineState clear = tip_at(16.3, 0.3);
  ASSERT_GT(0.3, pile.surface_height(16.3) + 0.001);
  ASSERT_LT(clear.theta_boom, deg2rad(k.boom_end_angle_deg));
  ASSERT_LT(cs.entry_x - clear.x, k.reverse_distance_m);
  cmd = controller_step(cs, clear, DigForce{}, pile, ActionParams{}, k, machine, 31.0);
  EXPECT_TRUE(cs.reverse_breakout);
  EXPECT_TRUE(has_event(cs, "reverse_breakout"));
  EXPECT_GT(cmd.lift.target_speed, 0.0);

  // Both end angles reached: no more joint commands while still reversing.
  MachineState carried = clear;
  carried.theta_bucket = deg2rad(50.0);
  carried.theta_boom = deg2rad(-10.0);
  cmd = controller_step(cs, carried, DigForce{}, pile, ActionParams{}, k, machine, 32.0);
  EXPECT_DOUBLE_EQ(cmd.tilt.target_speed, 0.0);
  EXPECT_DOUBLE_EQ(cmd.lift.target_speed, 0.0);
  EXPECT_LT(cmd.drive.target_speed, 0.0);
}

TEST(Breakout, OneMillimetreHysteresis) {
  EXPECT_FALSE(detect_breakout(1.0005, 1.0, true));
  EXPECT_TRUE(detect_breakout(1.0015, 1.0, true));
  EXPECT_FALSE(detect_breakout(1.5, 1.0, false));  // never cut soil: not a breakout
  EXPECT_FALSE(detect_breakout(0.9, 1.0, true));
}

TEST(Breakout, AbortsTheDigPhase) {
  PileState pile(gravel_spec(), 2.7, 40.0);
  const ControlConstants k;
  ControllerState cs;
  cs.phase = LoadingPhase::Dig;
  cs.lift_latched = true;
  cs.tilt_latched = true;
  cs.penetrated = true;
  cs.entry_x = 14.0;

  // Tip above the local surface after having cut: early breakout.
  MachineState ms = tip_at(17.0, pile.surface_height(17.0) + 0.01);
  controller_step(cs, ms, DigForce{}, pile, ActionParams{}, k, MachineSpec{}, 5.0);
  EXPECT_EQ(cs.phase, LoadingPhase::Brake);
  EXPECT_EQ(cs.dig_outcome, DigOutcome::breakout_early);
  EXPECT_TRUE(has_event(cs, "breakout"));
}

TEST(Breakout, GivesUpWhenNoSoilIsEverMet) {
  PileState pile(gravel_spec(), 2.7, 40.0);
  const ControlConstants k;
  ControllerState cs;
  cs.phase = LoadingPhase::Penetrate;
  cs.entry_x = 14.0;
  // 2 m past the toe without ever touching material.
  MachineState ms = tip_at(18.1, pile.surface_height(18.1) + 0.5);
  controller_step(cs, ms, DigForce{}, pile, ActionParams{}, k, MachineSpec{}, 5.0);
  EXPECT_EQ(cs.phase, LoadingPhase::Brake);
  EXPECT_EQ(cs.dig_outcome, DigOutcome::breakout_early);
}

TEST(Stall, DetectorNeedsTheFullQuietDwell) {
  const ControlConstants k;
  const ControllerTuning tune;
  StallDetector det(tune, k.dt_s);
  const int dwell = stall_steps(k, tune);
  ASSERT_EQ(dwell, 200);

  MachineState quiet;  // all rates zero
  for (int i = 0; i < dwell - 1; ++i) EXPECT_FALSE(det.update(quiet)) << i;
  EXPECT_TRUE(det.update(quiet));

  // Any motion above threshold resets the count.
  StallDetector det2(tune, k.dt_s);
  MachineState moving;
  for (int i = 0; i < dwell - 1; ++i) det2.update(quiet);
  moving.v = 0.02;
  EXPECT_FALSE(det2.update(moving));
  EXPECT_EQ(det2.quiet_steps(), 0);
  // Rates just below threshold still count as quiet.
  quiet.v = 0.009;
  quiet.omega_boom = 0.004;
  quiet.omega_bucket = -0.004;
  StallDetector det3(tune, k.dt_s);
  for (int i = 0; i < dwell - 1; ++i) EXPECT_FALSE(det3.update(quiet));
  EXPECT_TRUE(det3.update(quiet));
}

TEST(Stall, AbortsTheDigAfterTwoSecondsMotionless) {
  PileState pile(gravel_spec(), 2.7, 40.0);
  const ControlConstants k;
  const ControllerTuning tune;
  ControllerState cs;
  cs.phase = LoadingPhase::Dig;
  cs.lift_latched = true;
  cs.penetrated = true;
  cs.entry_x = 16.0;

  MachineState ms = tip_at(17.0, 0.2);  // buried, motionless
  DigForce f{};
  f.magnitude = 80.0e3;
  f.depth = 0.4;
  double t = 10.0;
  int steps = 0;
  while (cs.phase == LoadingPhase::Dig && steps < 1000) {
    update_stall_counter(cs, ms, tune);
    controller_step(cs, ms, f, pile, ActionParams{}, k, MachineSpec{}, t, tune);
    t += k.dt_s;
    ++steps;
  }
  EXPECT_EQ(cs.phase, LoadingPhase::Brake);
  EXPECT_EQ(cs.dig_outcome, DigOutcome::stalled);
  EXPECT_TRUE(has_event(cs, "stall"));
  EXPECT_EQ(steps, stall_steps(k, tune));
}

TEST(Stall, CounterOnlyAccumulatesWhileDigging) {
  ControllerState cs;
  cs.phase = LoadingPhase::Approach;
  MachineState quiet;
  for (int i = 0; i < 50; ++i) update_stall_counter(cs, quiet);
  EXPECT_EQ(cs.quiet_steps, 0);
  cs.phase = LoadingPhase::Dig;
  for (int i = 0; i < 50; ++i) update_stall_counter(cs, quiet);
  EXPECT_EQ(cs.quiet_steps, 50);
  quiet.v = 1.0;
  update_stall_counter(cs, quiet);
  EXPECT_EQ(cs.quiet_steps, 0);
}

TEST(Events, TimesAreChronological) {
  PileState pile(gravel_spec(), 2.7, 40.0);
  const ControlConstants k;
  const MachineSpec machine;
  ControllerState cs;
  ActionParams a;
  a.alpha3 = a.alpha4 = 0.0;
  a.alpha7_deg = -40.0;
  a.alpha8_deg = 30.0;

  MachineState ms = tip_at(16.05, 0.1);
  ms.theta_bucket = deg2rad(31.0);
  double t = 0.0;
  for (int i = 0; i < 400 && cs.phase != LoadingPhase::Done; ++i) {
    controller_step(cs, ms, DigForce{}, pile, a, k, machine, t);
    t += k.dt_s;
    if (cs.phase == LoadingPhase::Reverse) ms.x -= 0.02;  // fake the pull-out
  }
  ASSERT_EQ(cs.phase, LoadingPhase::Done);
  ASSERT_GE(cs.events.size(), 5u);
  for (std::size_t i = 1; i < cs.events.size(); ++i)
    EXPECT_GE(cs.events[i].t, cs.events[i - 1].t) << cs.events[i].name;
}
