#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "loadsim/csv.hpp"
#include "loadsim/errors.hpp"
#include "loadsim/plot.hpp"
#include "loadsim/results.hpp"
#include "loadsim/sim.hpp"

namespace loadsim {

// One run reduced to its productivity/efficiency coordinates.
struct PerformancePoint {
  std::string run_id;
  double p_p = 0.0;  // kg/s
  double p_e = 0.0;  // kg/kJ
  double m_load_kg = 0.0;
  std::string pile_id;

  void validate() const {
    if (!std::isfinite(p_p) || !std::isfinite(p_e) || !std::isfinite(m_load_kg))
      throw ModelError("PerformancePoint: non-finite value for run " + run_id);
    if (p_p < 0.0 || p_e < 0.0 || m_load_kg < 0.0)
      throw ModelError("PerformancePoint: negative value for run " + run_id);
  }
};

inline PerformancePoint performance_point(const LoadingRecord& r) {
  PerformancePoint p;
  p.run_id = r.run_id;
  p.p_p = r.metrics.p_p;
  p.p_e = r.metrics.p_e;
  p.m_load_kg = r.m_load_kg;
  p.pile_id = pile_id_of(r);
  p.validate();
  return p;
}

inline std::vector<PerformancePoint> performance_points(const std::vector<LoadingRecord>& rs) {
  std::vector<PerformancePoint> out;
  out.reserve(rs.size());
  for (const auto& r : rs) out.push_back(performance_point(r));
  return out;
}

// Marked runs: best efficiency (circle), best productivity (triangle),
// Pareto compromise (diamond) and best mass (square).
struct PoiSet {
  PerformancePoint best_efficiency;
  PerformancePoint best_productivity;
  PerformancePoint pareto_choice;
  PerformancePoint best_mass;
};

// a dominates b when a is >= in both coordinates and > in at least one.
inline bool dominates(const PerformancePoint& a, const PerformancePoint& b) {
  return a.p_p >= b.p_p && a.p_e >= b.p_e && (a.p_p > b.p_p || a.p_e > b.p_e);
}

// Non-dominated subset under joint maximization of (P_p, P_e), returned in
// ascending P_p order.  Exact coordinate ties are all kept (they do not
// dominate each other).
inline std::vector<PerformancePoint> pareto_front(const std::vector<PerformancePoint>& pts) {
  if (pts.empty()) return {};
  std::vector<const PerformancePoint*> sorted;
  sorted.reserve(pts.size());
  for (const auto& p : pts) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(), [](const PerformancePoint* a, const PerformancePoint* b) {
    if (a->p_p != b->p_p) return a->p_p > b->p_p;
    if (a->p_e != b->p_e) return a->p_e > b->p_e;
    return a->run_id < b->run_id;
  });

  std::vector<PerformancePoint> front;
  double best_pe_from_higher_pp = -std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j]->p_p == sorted[i]->p_p) ++j;
    const double group_max_pe = sorted[i]->p_e;
    if (group_max_pe > best_pe_from_higher_pp) {
      for (std::size_t k = i; k < j && sorted[k]->p_e == group_max_pe; ++k)
        front.push_back(*sorted[k]);
    }
    best_pe_from_higher_pp = std::max(best_pe_from_higher_pp, group_max_pe);
    i = j;
  }
  std::sort(front.begin(), front.end(), [](const PerformancePoint& a, const PerformancePoint& b) {
    if (a.p_p != b.p_p) return a.p_p < b.p_p;
    if (a.p_e != b.p_e) return a.p_e < b.p_e;
    return a.run_id < b.run_id;
  });
  return front;
}

namespace analysis_detail {

template <typename Key>
const PerformancePoint& arg_best(const std::vector<PerformancePoint>& pts, Key key) {
  const PerformancePoint* best = &pts.front();
  for (const auto& p : pts) {
    const double kp = key(p), kb = key(*best);
    if (kp > kb || (kp == kb && p.run_id < best->run_id)) best = &p;
  }
  return *best;
}

}  // namespace analysis_detail

// Argmax selections with deterministic lowest-run_id tie-break.  The diamond
// is the front point with the largest normalized product
// (P_p/max P_p)*(P_e/max P_e); `diamond_override` replaces it by an explicit
// run, which must exist and must itself be non-dominated.
inline PoiSet select_poi(const std::vector<PerformancePoint>& pts,
                         const std::string& diamond_override = {}) {
  if (pts.empty()) throw ModelError("select_poi: empty record set");
  PoiSet poi;
  poi.best_efficiency =
      analysis_detail::arg_best(pts, [](const PerformancePoint& p) { return p.p_e; });
  poi.best_productivity =
      analysis_detail::arg_best(pts, [](const PerformancePoint& p) { return p.p_p; });
  poi.best_mass =
      analysis_detail::arg_best(pts, [](const PerformancePoint& p) { return p.m_load_kg; });

  const std::vector<PerformancePoint> front = pareto_front(pts);
  double max_pp = 0.0, max_pe = 0.0;
  for (const auto& p : pts) {
    max_pp = std::max(max_pp, p.p_p);
    max_pe = std::max(max_pe, p.p_e);
  }
  const double span_pp = max_pp > 0.0 ? max_pp : 1.0;
  const double span_pe = max_pe > 0.0 ? max_pe : 1.0;
  poi.pareto_choice = analysis_detail::arg_best(front, [&](const PerformancePoint& p) {
    return (p.p_p / span_pp) * (p.p_e / span_pe);
  });

  if (!diamond_override.empty()) {
    const PerformancePoint* chosen = nullptr;
    for (const auto& p : pts)
      if (p.run_id == diamond_override) chosen = &p;
    if (chosen == nullptr)
      throw ConfigError("select_poi: override run_id not in record set: " + diamond_override);
    for (const auto& p : pts)
      if (dominates(p, *chosen))
        throw ConfigError("select_poi: override run " + diamond_override +
                          " is dominated by run " + p.run_id);
    poi.pareto_choice = *chosen;
  }
  return poi;
}

// ---------------------------------------------------------------------------
// Rank correlation
// ---------------------------------------------------------------------------

// 1-based mid-ranks: tied values share the average of the ranks they occupy.
inline std::vector<double> midranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && v[idx[j]] == v[idx[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);  // average of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[idx[k]] = mid;
    i = j;
  }
  return ranks;
}

// Tie-corrected Spearman correlation: Pearson correlation of mid-ranks.
// Degenerate inputs (fewer than two samples, or a constant series) yield 0.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ModelError("spearman: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  const std::vector<double> rx = midranks(x);
  const std::vector<double> ry = midranks(y);
  const double mean = 0.5 * static_cast<double>(n + 1);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Histograms
// ---------------------------------------------------------------------------

struct HistSpec {
  double x_min = 0.0;
  double x_max = 1.0;
  std::size_t x_bins = 10;
  double y_min = 0.0;
  double y_max = 1.0;
  std::size_t y_bins = 10;

  void validate() const {
    if (!(x_max > x_min) || !(y_max > y_min))
      throw ConfigError("HistSpec: max must exceed min on both axes");
    if (x_bins == 0 || y_bins == 0) throw ConfigError("HistSpec: bin counts must be positive");
  }
};

struct Histogram2D {
  HistSpec spec;
  std::vector<std::size_t> counts;  // row-major, index = iy * x_bins + ix
  std::size_t total = 0;

  std::size_t at(std::size_t ix, std::size_t iy) const { return counts[iy * spec.x_bins + ix]; }
};

// Fixed-edge bin index; out-of-range values land in the edge bins.
inline std::size_t bin_index(double v, double lo, double hi, std::size_t n) {
  const double w = (hi - lo) / static_cast<double>(n);
  const double raw = std::floor((v - lo) / w);
  if (raw < 0.0) return 0;
  if (raw >= static_cast<double>(n)) return n - 1;
  return static_cast<std::size_t>(raw);
}

inline Histogram2D histogram2d_values(const std::vector<double>& xs, const std::vector<double>& ys,
                                      const HistSpec& spec) {
  if (xs.size() != ys.size()) throw ModelError("histogram2d: size mismatch");
  spec.validate();
  Histogram2D h;
  h.spec = spec;
  h.counts.assign(spec.x_bins * spec.y_bins, 0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::size_t ix = bin_index(xs[i], spec.x_min, spec.x_max, spec.x_bins);
    const std::size_t iy = bin_index(ys[i], spec.y_min, spec.y_max, spec.y_bins);
    ++h.counts[iy * spec.x_bins + ix];
  }
  h.total = xs.size();
  return h;
}

// ---------------------------------------------------------------------------
// Field access by name (CLI-facing)
// ---------------------------------------------------------------------------

inline double record_field(const LoadingRecord& r, const std::string& name) {
  if (name == "mass") return r.m_load_kg;
  if (name == "time") return r.t_load_s;
  if (name == "work") return r.w_kj;
  if (name == "spill") return r.metrics.s_load;
  if (name == "pe") return r.metrics.p_e;
  if (name == "pp") return r.metrics.p_p;
  if (name == "pb") return r.metrics.p_b;
  if (name == "slope") return r.slope_deg;
  if (name == "alpha1") return r.action.alpha1;
  if (name == "alpha2") return r.action.alpha2;
  if (name == "alpha3") return r.action.alpha3;
  if (name == "alpha4") return r.action.alpha4;
  if (name == "alpha5") return r.action.alpha5;
  if (name == "alpha6") return r.action.alpha6;
  if (name == "alpha7" || name == "alpha7_deg") return r.action.alpha7_deg;
  if (name == "alpha8" || name == "alpha8_deg") return r.action.alpha8_deg;
  throw ConfigError("unknown result field: " + name);
}

inline Histogram2D histogram2d(const std::vector<LoadingRecord>& rs, const std::string& x_field,
                               const std::string& y_field, const HistSpec& spec) {
  std::vector<double> xs, ys;
  xs.reserve(rs.size());
  ys.reserve(rs.size());
  for (const auto& r : rs) {
    xs.push_back(record_field(r, x_field));
    ys.push_back(record_field(r, y_field));
  }
  return histogram2d_values(xs, ys, spec);
}

// ---------------------------------------------------------------------------
// Matched-action cross-pile lookup
// ---------------------------------------------------------------------------

struct MatchReport {
  std::string source_pile;
  double target_pp = 0.0;
  double target_pe = 0.0;
  double radius = 0.0;
  std::vector<LoadingRecord> source_matches;          // runs within the radius
  std::vector<std::array<double, 8>> alphas;          // their action tuples, sorted
  std::map<std::string, std::vector<LoadingRecord>> per_pile;  // same tuples everywhere
};

// Finds source-pile runs whose (P_p, P_e) lies within `radius` of the target
// under per-axis normalization by the source maxima, then pulls the rows with
// exactly those action tuples out of every campaign in `records`.
inline MatchReport match_actions(const std::vector<LoadingRecord>& records,
                                 const std::string& source_pile, double target_pp,
                                 double target_pe, double radius) {
  if (radius < 0.0) throw ConfigError("match_actions: radius must be >= 0");
  std::map<std::string, std::vector<LoadingRecord>> by_pile;
  for (const auto& r : records) by_pile[pile_id_of(r)].push_back(r);
  const auto src_it = by_pile.find(source_pile);
  if (src_it == by_pile.end())
    throw ConfigError("match_actions: no records for pile " + source_pile);
  const std::vector<LoadingRecord>& source = src_it->second;

  double max_pp = 0.0, max_pe = 0.0;
  for (const auto& r : source) {
    max_pp = std::max(max_pp, r.metrics.p_p);
    max_pe = std::max(max_pe, r.metrics.p_e);
  }
  const double span_pp = max_pp > 0.0 ? max_pp : 1.0;
  const double span_pe = max_pe > 0.0 ? max_pe : 1.0;

  MatchReport rep;
  rep.source_pile = source_pile;
  rep.target_pp = target_pp;
  rep.target_pe = target_pe;
  rep.radius = radius;

  std::set<std::array<double, 8>> alpha_set;
  for (const auto& r : source) {
    const double du = (r.metrics.p_p - target_pp) / span_pp;
    const double dv = (r.metrics.p_e - target_pe) / span_pe;
    if (std::sqrt(du * du + dv * dv) <= radius) {
      rep.source_matches.push_back(r);
      alpha_set.insert(r.action.as_array());
    }
  }
  rep.alphas.assign(alpha_set.begin(), alpha_set.end());

  for (const auto& [pile, rows] : by_pile) {
    std::vector<LoadingRecord> hits;
    for (const auto& r : rows)
      if (alpha_set.count(r.action.as_array()) != 0) hits.push_back(r);
    rep.per_pile.emplace(pile, std::move(hits));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Trend statistics
// ---------------------------------------------------------------------------

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct SlopeTrendRow {
  std::string soil;
  double slope_deg = 0.0;
  std::size_t n_finished = 0;
  double median_m_load_kg = 0.0;
};

struct DigSpeedRow {
  std::string pile_id;
  std::size_t n_finished = 0;
  double spearman_alpha2_pe = 0.0;  // expected negative: fast digging costs energy
  double spearman_alpha2_pp = 0.0;  // expected positive: fast digging loads sooner
};

struct TrendReport {
  std::vector<SlopeTrendRow> slope_rows;
  std::vector<DigSpeedRow> dig_rows;
};

// Per-(soil, slope) median load mass and per-pile rank correlations between
// dig speed (alpha2) and the two performance metrics, over runs that finished
// their cycle.
inline TrendReport trend_tests(const std::vector<LoadingRecord>& records) {
  std::map<std::pair<std::string, double>, std::vector<const LoadingRecord*>> groups;
  for (const auto& r : records)
    if (finished_cycle(r.flag)) groups[{r.soil, r.slope_deg}].push_back(&r);

  TrendReport rep;
  for (const auto& [key, rows] : groups) {
    SlopeTrendRow s;
    s.soil = key.first;
    s.slope_deg = key.second;
    s.n_finished = rows.size();
    std::vector<double> masses;
    masses.reserve(rows.size());
    for (const auto* r : rows) masses.push_back(r->m_load_kg);
    s.median_m_load_kg = median(std::move(masses));
    rep.slope_rows.push_back(std::move(s));

    DigSpeedRow d;
    d.pile_id = pile_id_of(*rows.front());
    d.n_finished = rows.size();
    std::vector<double> a2, pe, pp;
    for (const auto* r : rows) {
      a2.push_back(r->action.alpha2);
      pe.push_back(r->metrics.p_e);
      pp.push_back(r->metrics.p_p);
    }
    d.spearman_alpha2_pe = spearman(a2, pe);
    d.spearman_alpha2_pp = spearman(a2, pp);
    rep.dig_rows.push_back(std::move(d));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Results I/O and figure emission
// ---------------------------------------------------------------------------

inline std::vector<LoadingRecord> load_results_csv(const std::filesystem::path& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty() || lines.front() != kResultsHeader)
    throw IoError("results file missing header: " + path.string());
  std::vector<LoadingRecord> out;
  out.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    out.push_back(parse_result_row(lines[i]));
  }
  return out;
}

inline void write_scatter_svg(const std::vector<PerformancePoint>& pts,
                              const std::vector<PerformancePoint>& front, const PoiSet* poi,
                              const std::filesystem::path& path, const std::string& title) {
  double max_pp = 1.0, max_pe = 1.0;
  for (const auto& p : pts) {
    max_pp = std::max(max_pp, p.p_p);
    max_pe = std::max(max_pe, p.p_e);
  }
  SvgPlot plot(0.0, 1.05 * max_pp, 0.0, 1.05 * max_pe);
  plot.title(title);
  plot.x_label("P_p (kg/s)");
  plot.y_label("P_e (kg/kJ)");
  for (const auto& p : pts) plot.circle(p.p_p, p.p_e, 1.6, "#9aa7b5");
  std::vector<std::pair<double, double>> fl;
  fl.reserve(front.size());
  for (const auto& p : front) fl.emplace_back(p.p_p, p.p_e);
  plot.polyline(fl, "#c0392b", 1.5);
  for (const auto& p : front) plot.circle(p.p_p, p.p_e, 2.4, "#c0392b");
  if (poi != nullptr) {
    plot.circle(poi->best_efficiency.p_p, poi->best_efficiency.p_e, 6.0, "#1a6e2e", false);
    plot.text(poi->best_efficiency.p_p, poi->best_efficiency.p_e, " max P_e");
    plot.circle(poi->best_productivity.p_p, poi->best_productivity.p_e, 6.0, "#1f4f9e", false);
    plot.text(poi->best_productivity.p_p, poi->best_productivity.p_e, " max P_p");
    plot.circle(poi->pareto_choice.p_p, poi->pareto_choice.p_e, 6.0, "#8e44ad", false);
    plot.text(poi->pareto_choice.p_p, poi->pareto_choice.p_e, " compromise");
    plot.circle(poi->best_mass.p_p, poi->best_mass.p_e, 6.0, "#b8860b", false);
    plot.text(poi->best_mass.p_p, poi->best_mass.p_e, " max mass");
  }
  plot.write(path);
}

inline void write_histogram_svg(const Histogram2D& h, const std::string& x_name,
                                const std::string& y_name, const std::filesystem::path& path,
                                const std::string& title) {
  SvgPlot plot(h.spec.x_min, h.spec.x_max, h.spec.y_min, h.spec.y_max);
  plot.title(title);
  plot.x_label(x_name);
  plot.y_label(y_name);
  std::size_t max_count = 1;
  for (std::size_t c : h.counts) max_count = std::max(max_count, c);
  const double wx = (h.spec.x_max - h.spec.x_min) / static_cast<double>(h.spec.x_bins);
  const double wy = (h.spec.y_max - h.spec.y_min) / static_cast<double>(h.spec.y_bins);
  for (std::size_t iy = 0; iy < h.spec.y_bins; ++iy) {
    for (std::size_t ix = 0; ix < h.spec.x_bins; ++ix) {
      const std::size_t c = h.at(ix, iy);
      if (c == 0) continue;
      const double x0 = h.spec.x_min + static_cast<double>(ix) * wx;
      const double y0 = h.spec.y_min + static_cast<double>(iy) * wy;
      plot.heat_cell(x0, x0 + wx, y0, y0 + wy,
                     static_cast<double>(c) / static_cast<double>(max_count));
    }
  }
  plot.write(path);
}

// Writes the per-step series, the terrain provenance table and a plot of the
// tip path over the initial/final surfaces with mass-fate shading.
inline void export_trajectory(const RunResult& rr, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string& run = rr.record.run_id;

  std::string series_text(kSeriesHeader);
  series_text += '\n';
  for (const auto& f : rr.series) {
    series_text += format_series_row(f);
    series_text += '\n';
  }
  write_text_file(out_dir / ("series_" + run + ".csv"), series_text);

  std::string terrain_text = "x,height_initial,height_final,mass_loaded,mass_displaced\n";
  for (const auto& row : rr.provenance) {
    terrain_text += fmt_g(row.x) + "," + fmt_g(row.height_initial) + "," +
                    fmt_g(row.height_final) + "," + fmt_g(row.mass_loaded) + "," +
                    fmt_g(row.mass_displaced) + "\n";
  }
  write_text_file(out_dir / ("terrain_" + run + ".csv"), terrain_text);

  double x_lo = 0.0, x_hi = 1.0, z_hi = 1.0;
  if (!rr.provenance.empty()) {
    x_lo = rr.provenance.front().x;
    x_hi = rr.provenance.back().x;
  }
  double max_loaded = 0.0, max_displaced = 0.0;
  for (const auto& row : rr.provenance) {
    z_hi = std::max({z_hi, row.height_initial, row.height_final});
    max_loaded = std::max(max_loaded, row.mass_loaded);
    max_displaced = std::max(max_displaced, row.mass_displaced);
  }
  for (const auto& f : rr.series) {
    x_lo = std::min(x_lo, f.tip_x);
    x_hi = std::max(x_hi, f.tip_x);
    z_hi = std::max(z_hi, f.tip_z);
  }
  SvgPlot plot(x_lo - 0.5, x_hi + 0.5, -0.3, z_hi + 0.5);
  plot.title("loading cycle " + run);
  plot.x_label("x (m)");
  plot.y_label("z (m)");

  const double dx = rr.provenance.size() >= 2
                        ? rr.provenance[1].x - rr.provenance[0].x
                        : 0.2;
  for (const auto& row : rr.provenance) {
    if (max_loaded > 0.0 && row.mass_loaded > 0.0)
      plot.heat_cell(row.x - 0.5 * dx, row.x + 0.5 * dx, 0.0, row.height_initial,
                     row.mass_loaded / max_loaded, "#1f4f9e");
    if (max_displaced > 0.0 && row.mass_displaced > 0.0)
      plot.heat_cell(row.x - 0.5 * dx, row.x + 0.5 * dx, 0.0, row.height_initial,
                     0.6 * row.mass_displaced / max_displaced, "#d47f1e");
  }
  std::vector<std::pair<double, double>> init_line, final_line, tip_line;
  for (const auto& row : rr.provenance) {
    init_line.emplace_back(row.x, row.height_initial);
    final_line.emplace_back(row.x, row.height_final);
  }
  for (const auto& f : rr.series) tip_line.emplace_back(f.tip_x, f.tip_z);
  plot.polyline(init_line, "#7f8c8d", 1.0);
  plot.polyline(final_line, "#1a6e2e", 1.5);
  plot.polyline(tip_line, "#1f4f9e", 1.5);
  if (!tip_line.empty()) {
    plot.circle(tip_line.front().first, tip_line.front().second, 3.0, "#1f4f9e");
    plot.circle(tip_line.back().first, tip_line.back().second, 3.0, "#c0392b");
  }
  plot.write(out_dir / ("trajectory_" + run + ".svg"));
}

}  // namespace loadsim
