#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "loadsim/campaign.hpp"
#include "loadsim/controller.hpp"
#include "loadsim/machine.hpp"
#include "loadsim/results.hpp"
#include "loadsim/specs.hpp"
#include "loadsim/terrain.hpp"

namespace loadsim {

struct SimFrame {
  double t = 0.0;
  double x = 0.0;
  double v = 0.0;
  double theta_boom = 0.0;
  double theta_bucket = 0.0;
  double f_drive = 0.0;   // N, traction force
  double f_lift = 0.0;    // N, lift cylinder force (torque / lever arm)
  double f_tilt = 0.0;    // N, tilt cylinder force
  double f_dig = 0.0;     // N, soil reaction magnitude
  double w_accum_kj = 0.0;
  double load_mass = 0.0;
  LoadingPhase phase = LoadingPhase::Approach;
  double tip_x = 0.0;  // not part of the CSV schema; kept for plotting
  double tip_z = 0.0;
};

inline const char* kSeriesHeader =
    "t,x,v,theta_boom,theta_bucket,F_drive,F_lift,F_tilt,F_dig,W_accum,load_mass,phase";

inline std::string format_series_row(const SimFrame& f) {
  std::string s;
  s.reserve(180);
  bool first = true;
  for (double v : {f.t, f.x, f.v, f.theta_boom, f.theta_bucket, f.f_drive, f.f_lift, f.f_tilt,
                   f.f_dig, f.w_accum_kj, f.load_mass}) {
    if (!first) s += ',';
    s += fmt_g(v);
    first = false;
  }
  s += ',';
  s += to_string(f.phase);
  return s;
}

// t_load: first soil contact to end of the brake hold. Runs that never
// contacted report 0; a run that contacted but got cut off before the brake
// ended is measured to its last simulated instant.
inline double t_load_definition(const std::vector<SimEvent>& events, double t_end = 0.0) {
  double contact = -1.0;
  double brake_end = -1.0;
  for (const auto& e : events) {
    if (e.name == "contact" && contact < 0.0) contact = e.t;
    if (e.name == "brake_end" && brake_end < 0.0) brake_end = e.t;
  }
  if (contact < 0.0) return 0.0;
  return (brake_end >= 0.0 ? brake_end : t_end) - contact;
}

struct SimOptions {
  bool log_series = false;
  double watchdog_s = 120.0;
  double start_offset_m = 8.0;   // vehicle this far before the toe
  double tip_hover_m = 0.0;      // bucket starts lowered to the ground
  double domain_margin_m = 14.0; // run-out beyond the ramp end
  ControllerTuning controller;
  DynamicsTuning dynamics;
};

struct RunResult {
  LoadingRecord record;
  std::vector<SimEvent> events;
  std::vector<SimFrame> series;          // filled only when log_series
  std::vector<ProvenanceRow> provenance; // terrain accounting at cycle end
  double max_conservation_error = 0.0;
  double sim_time_s = 0.0;
  int steps = 0;
  double busy_seconds = 0.0;  // wall time spent inside the loop (for throughput)
};

namespace sim_detail {

// Initial boom angle placing the tip at `hover` above flat ground with the
// bucket level: pivot_z + (L_boom + L_tip) * sin(theta) = hover.
inline double initial_boom_angle(const MachineSpec& m, double hover) {
  const double reach = m.boom_length_m + m.bucket_tip_offset_m;
  const double s = (hover - m.boom_pivot_height_m) / reach;
  if (!(s >= -1.0 && s <= 1.0))
    throw ModelError("initial pose: hover height unreachable");
  return std::asin(s);
}

}  // namespace sim_detail

// One full loading cycle. Deterministic for fixed inputs; the seed is part of
// the record identity but the reduced physics uses no randomness. Never
// throws for in-cycle numeric trouble: that becomes flag numeric_error.
inline RunResult run_loading_cycle(const PileSpec& pile_spec, const MachineSpec& machine,
                                   const ActionParams& action, const ControlConstants& k,
                                   std::uint64_t /*seed*/ = 0, const SimOptions& opt = {}) {
  pile_spec.validate();
  machine.validate();
  action.validate();
  k.validate();

  const auto t_start = std::chrono::steady_clock::now();

  RunResult out;
  LoadingRecord& rec = out.record;
  rec.run_id = run_id_for(pile_spec, action);
  rec.soil = pile_spec.soil.name;
  rec.slope_deg = pile_spec.slope_deg;
  rec.action = action;

  const double domain =
      pile_spec.toe_x_m + pile_spec.ramp_length_m() + opt.domain_margin_m;
  PileState pile(pile_spec, machine.bucket_width_m, domain);

  MachineState ms;
  ms.x = pile_spec.toe_x_m - opt.start_offset_m;
  ms.theta_boom = sim_detail::initial_boom_angle(machine, opt.tip_hover_m);
  ControllerState cs;
  DigForce dig;  // zero until the first in-soil step

  const double dt = k.dt_s;
  const int max_steps = static_cast<int>(std::lround(opt.watchdog_s / dt));
  double t = 0.0;
  bool numeric_error = false;

  auto log_frame = [&](double tf) {
    if (!opt.log_series) return;
    const TipPose pose = bucket_tip_pose(ms, machine);
    SimFrame f;
    f.t = tf;
    f.x = ms.x;
    f.v = ms.v;
    f.theta_boom = ms.theta_boom;
    f.theta_bucket = ms.theta_bucket;
    f.f_drive = ms.f_drive_n;
    f.f_lift = ms.tau_lift_nm / machine.lever_arm_m;
    f.f_tilt = ms.tau_tilt_nm / machine.lever_arm_m;
    f.f_dig = dig.magnitude;
    f.w_accum_kj = ms.work_j / 1000.0;
    f.load_mass = ms.bucket_load_mass;
    f.phase = cs.phase;
    f.tip_x = pose.tip.x;
    f.tip_z = pose.tip.z;
    out.series.push_back(f);
  };

  log_frame(0.0);  // rest state before the first step

  int step = 0;
  try {
    for (; step < max_steps && cs.phase != LoadingPhase::Done; ++step) {
      update_stall_counter(cs, ms, opt.controller);
      const MachineCommands cmd =
          controller_step(cs, ms, dig, pile, action, k, machine, t, opt.controller);

      const MachineState prev = ms;
      ms = step_dynamics(prev, cmd, dig, dt, machine, opt.dynamics);
      t += dt;
      if (!ms.finite()) {
        numeric_error = true;
        break;
      }

      const TipPose pose0 = bucket_tip_pose(prev, machine);
      const TipPose pose1 = bucket_tip_pose(ms, machine);
      const Vec2 tip_vel = (pose1.tip - pose0.tip) * (1.0 / dt);

      dig = pile.dig_resistance(pose1.tip, tip_vel, ms.theta_bucket);

      // Retention model: the bucket accepts material only up to its
      // angle-dependent carry capacity (a full bucket bulldozes); should the
      // load ever exceed the capacity, the excess leaks back out at the tip
      // and counts as spill.
      const double cap = carry_capacity(ms.theta_bucket, machine.bucket_capacity_m3);
      pile.excavate_step(pose0.tip, pose1.tip, ms.theta_bucket, dt,
                         std::max(0.0, cap - pile.loaded_volume()));
      const double excess = pile.loaded_volume() - cap;
      if (excess > 0.0) pile.spill_from_bucket(excess, pose1.tip.x);

      pile.relax_slopes();

      ms.bucket_load_mass = std::max(0.0, pile.loaded_mass());
      ms.bucket_load_volume = std::max(0.0, pile.loaded_volume());

      out.max_conservation_error =
          std::max(out.max_conservation_error, pile.conservation_error());
      log_frame(t);
    }
  } catch (const std::exception&) {
    // In-cycle model failures (e.g. relaxation non-convergence) are recorded,
    // never propagated: a sweep must survive individual bad runs.
    numeric_error = true;
  }

  out.sim_time_s = t;
  out.steps = step;
  out.events = cs.events;

  if (numeric_error) {
    rec.flag = RunFlag::numeric_error;
  } else if (cs.phase != LoadingPhase::Done) {
    rec.flag = RunFlag::timeout;
  } else {
    switch (cs.dig_outcome) {
      case DigOutcome::completed: rec.flag = RunFlag::completed; break;
      case DigOutcome::stalled: rec.flag = RunFlag::stalled; break;
      case DigOutcome::breakout_early: rec.flag = RunFlag::breakout_early; break;
    }
  }

  const double rho = pile_spec.soil.density_kg_m3;
  rec.m_load_kg = std::max(0.0, pile.loaded_mass());
  rec.t_load_s = t_load_definition(cs.events, t);
  rec.w_kj = ms.work_j / 1000.0;
  const double v_load = rec.m_load_kg / rho;
  const double v_spill = std::max(0.0, pile.spilled_ground_mass()) / rho;
  rec.metrics = compute_metrics(rec.m_load_kg, rec.t_load_s, rec.w_kj, v_load, v_spill,
                                machine.bucket_capacity_m3);

  out.provenance = pile.provenance();
  out.busy_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

inline RunResult run_manifest_row(const CampaignManifest& m, const ManifestRow& row,
                                  const MachineSpec& machine, const ControlConstants& k,
                                  const SimOptions& opt = {}) {
  return run_loading_cycle(m.pile_for(row), machine, row.action, k, row.seed, opt);
}

}  // namespace loadsim
