#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "loadsim/action.hpp"
#include "loadsim/csv.hpp"
#include "loadsim/errors.hpp"

namespace loadsim {

enum class RunFlag { completed, stalled, breakout_early, timeout, numeric_error };

inline const char* to_string(RunFlag f) {
  switch (f) {
    case RunFlag::completed: return "completed";
    case RunFlag::stalled: return "stalled";
    case RunFlag::breakout_early: return "breakout_early";
    case RunFlag::timeout: return "timeout";
    case RunFlag::numeric_error: return "numeric_error";
  }
  return "?";
}

inline RunFlag run_flag_from(const std::string& s) {
  if (s == "completed") return RunFlag::completed;
  if (s == "stalled") return RunFlag::stalled;
  if (s == "breakout_early") return RunFlag::breakout_early;
  if (s == "timeout") return RunFlag::timeout;
  if (s == "numeric_error") return RunFlag::numeric_error;
  throw IoError("unknown run flag '" + s + "'");
}

// A run that produced usable metrics (its cycle ran to the Done state).
inline bool finished_cycle(RunFlag f) {
  return f == RunFlag::completed || f == RunFlag::stalled || f == RunFlag::breakout_early;
}

struct Metrics {
  double p_e = 0.0;     // kg/kJ
  double p_p = 0.0;     // kg/s
  double p_b = 0.0;     // load volume / bucket volume
  double s_load = 0.0;  // spill, % of bucket volume
};

// Exact metric formulas with the zero-load convention: no load -> all three
// performance numbers are 0 while spillage is still reported.
inline Metrics compute_metrics(double m_load_kg, double t_load_s, double w_kj,
                               double v_load_m3, double v_spill_m3, double v_bucket_m3) {
  Metrics out;
  out.s_load = 100.0 * v_spill_m3 / v_bucket_m3;
  if (m_load_kg <= 0.0) return out;
  if (t_load_s <= 0.0)
    throw ModelError("compute_metrics: positive load with t_load <= 0");
  out.p_p = m_load_kg / t_load_s;
  out.p_e = w_kj > 0.0 ? m_load_kg / w_kj : 0.0;
  out.p_b = v_load_m3 / v_bucket_m3;
  return out;
}

struct LoadingRecord {
  std::string run_id;
  std::string soil;
  double slope_deg = 0.0;
  ActionParams action;
  double m_load_kg = 0.0;
  double t_load_s = 0.0;
  double w_kj = 0.0;
  Metrics metrics;
  RunFlag flag = RunFlag::completed;
};

inline double weighted_score(const LoadingRecord& r, const std::array<double, 3>& w) {
  return w[0] * r.metrics.p_e + w[1] * r.metrics.p_p + w[2] * r.metrics.p_b;
}

inline const char* kResultsHeader =
    "run_id,soil,slope_deg,alpha1,alpha2,alpha3,alpha4,alpha5,alpha6,alpha7_deg,alpha8_deg,"
    "m_load_kg,t_load_s,W_kJ,s_load_pct,P_e_kg_per_kJ,P_p_kg_per_s,P_b,flag";

inline std::string format_result_row(const LoadingRecord& r) {
  std::string s;
  s.reserve(220);
  s += r.run_id;
  s += ',';
  s += r.soil;
  s += ',';
  s += fmt_g(r.slope_deg);
  for (double v : r.action.as_array()) {
    s += ',';
    s += fmt_g(v);
  }
  for (double v : {r.m_load_kg, r.t_load_s, r.w_kj, r.metrics.s_load, r.metrics.p_e,
                   r.metrics.p_p, r.metrics.p_b}) {
    s += ',';
    s += fmt_g(v);
  }
  s += ',';
  s += to_string(r.flag);
  return s;
}

inline constexpr int kResultFieldCount = 19;

inline LoadingRecord parse_result_row(const std::string& line) {
  auto f = split_csv_line(line);
  if (f.size() != kResultFieldCount)
    throw IoError("result row: expected 19 fields, got " + std::to_string(f.size()));
  LoadingRecord r;
  r.run_id = f[0];
  r.soil = f[1];
  const std::string where = "result row " + r.run_id;
  r.slope_deg = parse_double(f[2], where);
  std::array<double, 8> a{};
  for (int i = 0; i < 8; ++i) a[i] = parse_double(f[3 + i], where);
  r.action = ActionParams::from_array(a);
  r.m_load_kg = parse_double(f[11], where);
  r.t_load_s = parse_double(f[12], where);
  r.w_kj = parse_double(f[13], where);
  r.metrics.s_load = parse_double(f[14], where);
  r.metrics.p_e = parse_double(f[15], where);
  r.metrics.p_p = parse_double(f[16], where);
  r.metrics.p_b = parse_double(f[17], where);
  r.flag = run_flag_from(f[18]);
  return r;
}

inline std::string pile_id_of(const LoadingRecord& r) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%g", r.soil.c_str(), r.slope_deg);
  return buf;
}

}  // namespace loadsim
