// loadsim — command-line front end for the wheel-loader loading-cycle
// simulator: campaign sweeps, statistical analysis and trajectory export.

#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "loadsim/analysis.hpp"
#include "loadsim/campaign.hpp"
#include "loadsim/config.hpp"
#include "loadsim/sim.hpp"
#include "loadsim/sweep.hpp"

namespace fs = std::filesystem;
using namespace loadsim;

namespace {

constexpr const char* kDefaultPiles = "gravel:10,gravel:20,gravel:30,gravel:40,dirt:30,sand:30";

ResolvedConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return validate_config(nlohmann::json::object());
  return load_config_file(path);
}

std::vector<PileSpec> pick_piles(const ResolvedConfig& cfg, const std::string& list) {
  if (list.empty() && !cfg.piles.empty()) return cfg.piles;
  const std::string spec = list.empty() ? kDefaultPiles : list;
  std::vector<PileSpec> piles;
  for (const auto& tok : split_csv_line(spec)) {
    const auto pos = tok.find(':');
    if (pos == std::string::npos)
      throw ConfigError("--piles entries must be soil:slope_deg, got '" + tok + "'");
    piles.push_back(
        cfg.make_pile(tok.substr(0, pos), parse_double(tok.substr(pos + 1), "pile slope")));
  }
  return piles;
}

// Accepts either a campaign directory (containing results.csv) or a direct
// path to a results file.
fs::path resolve_results_file(const std::string& arg) {
  const fs::path p(arg);
  if (fs::is_directory(p)) {
    const fs::path f = p / "results.csv";
    if (!fs::exists(f)) throw IoError("no results.csv in " + p.string());
    return f;
  }
  if (!fs::exists(p)) throw IoError("results path not found: " + p.string());
  return p;
}

std::map<std::string, std::vector<LoadingRecord>> group_by_pile(
    const std::vector<LoadingRecord>& records) {
  std::map<std::string, std::vector<LoadingRecord>> by_pile;
  for (const auto& r : records) by_pile[pile_id_of(r)].push_back(r);
  return by_pile;
}

void write_poi_csv(const fs::path& path, const PoiSet& poi) {
  std::string text = "mark,run_id,P_p_kg_per_s,P_e_kg_per_kJ,m_load_kg\n";
  const auto row = [&](const char* mark, const PerformancePoint& p) {
    text += std::string(mark) + "," + p.run_id + "," + fmt_g(p.p_p) + "," + fmt_g(p.p_e) + "," +
            fmt_g(p.m_load_kg) + "\n";
  };
  row("best_efficiency", poi.best_efficiency);
  row("best_productivity", poi.best_productivity);
  row("pareto_choice", poi.pareto_choice);
  row("best_mass", poi.best_mass);
  write_text_file(path, text);
}

void print_poi(const std::string& pile, const PoiSet& poi) {
  const auto line = [&](const char* mark, const PerformancePoint& p) {
    std::printf("  %-18s %s  P_p=%.4g kg/s  P_e=%.4g kg/kJ  m=%.4g kg\n", mark,
                p.run_id.c_str(), p.p_p, p.p_e, p.m_load_kg);
  };
  std::printf("points of interest for pile %s:\n", pile.c_str());
  line("best_efficiency", poi.best_efficiency);
  line("best_productivity", poi.best_productivity);
  line("pareto_choice", poi.pareto_choice);
  line("best_mass", poi.best_mass);
}

int cmd_sweep(const std::string& config_path, const std::string& piles_arg, int workers,
              const std::string& out_dir, bool resume, std::size_t limit, bool series) {
  const ResolvedConfig cfg = load_config_or_default(config_path);
  const std::vector<PileSpec> piles = pick_piles(cfg, piles_arg);
  const std::vector<ActionParams> actions = build_parameter_grid(cfg.grid);

  CampaignManifest manifest = enumerate_campaign(piles, actions);
  manifest.machine_hash = machine_fingerprint(cfg.machine);

  fs::create_directories(out_dir);
  write_manifest(manifest, fs::path(out_dir) / "manifest.csv");

  nlohmann::json cj;
  cj["schema_version"] = manifest.schema_version;
  cj["machine_hash"] = manifest.machine_hash;
  cj["n_piles"] = piles.size();
  cj["n_actions"] = actions.size();
  cj["n_runs"] = manifest.rows.size();
  auto arr = nlohmann::json::array();
  for (const auto& p : piles)
    arr.push_back({{"id", p.id()},
                   {"soil", p.soil.name},
                   {"slope_deg", p.slope_deg},
                   {"toe_x_m", p.toe_x_m},
                   {"crest_height_m", p.crest_height_m},
                   {"grid_dx_m", p.grid_dx_m}});
  cj["piles"] = arr;
  write_text_file(fs::path(out_dir) / "campaign.json", cj.dump(2) + "\n");

  ResultStore store{fs::path(out_dir)};
  SweepOptions opt;
  opt.workers = workers;
  opt.resume = resume;
  opt.log_series = series;
  if (limit > 0) opt.limit = limit;

  std::printf("campaign: %zu piles x %zu actions = %zu runs (machine %s)\n", piles.size(),
              actions.size(), manifest.rows.size(), manifest.machine_hash.c_str());
  const SweepSummary sum = execute_campaign(manifest, cfg.machine, cfg.control, store, opt);
  const ThroughputReport tp = throughput_report(sum);

  std::printf("executed %zu, skipped %zu existing, wall %.1f s, busy %.1f s (%d workers)\n",
              sum.executed, sum.skipped_existing, sum.wall_seconds, sum.busy_seconds,
              sum.workers);
  for (const auto& [flag, count] : sum.flag_counts)
    std::printf("  %-16s %zu\n", flag.c_str(), count);
  std::printf("throughput: %.0f runs/cpu-hour, %.0f runs/wall-hour\n", tp.runs_per_cpu_hour,
              tp.runs_per_wall_hour);
  if (sum.skipped_existing + sum.executed >= manifest.rows.size())
    std::printf("results: %s\n", store.results_path().string().c_str());
  else
    std::printf("partial results in %s (rerun with --resume to continue)\n",
                store.part_path().string().c_str());
  return 0;
}

int cmd_analyze(const std::string& results_arg, const std::string& pile_arg,
                const std::string& hist_arg, bool scatter, bool trends,
                const std::string& match_arg, double radius, const std::string& out_arg,
                std::size_t bins_x, std::size_t bins_y) {
  const fs::path results_file = resolve_results_file(results_arg);
  const std::vector<LoadingRecord> records = load_results_csv(results_file);
  const auto by_pile = group_by_pile(records);
  const fs::path out =
      out_arg.empty() ? results_file.parent_path() / "analysis" : fs::path(out_arg);
  fs::create_directories(out);

  std::vector<std::string> selected;
  if (pile_arg.empty()) {
    for (const auto& [pile, rows] : by_pile) selected.push_back(pile);
  } else {
    if (by_pile.find(pile_arg) == by_pile.end())
      throw ConfigError("no records for pile " + pile_arg);
    selected.push_back(pile_arg);
  }

  if (scatter) {
    for (const auto& pile : selected) {
      const auto pts = performance_points(by_pile.at(pile));
      const auto front = pareto_front(pts);
      const PoiSet poi = select_poi(pts);
      std::string front_text = "run_id,P_p_kg_per_s,P_e_kg_per_kJ,m_load_kg\n";
      for (const auto& p : front)
        front_text +=
            p.run_id + "," + fmt_g(p.p_p) + "," + fmt_g(p.p_e) + "," + fmt_g(p.m_load_kg) + "\n";
      write_text_file(out / ("front_" + pile + ".csv"), front_text);
      write_poi_csv(out / ("poi_" + pile + ".csv"), poi);
      write_scatter_svg(pts, front, &poi, out / ("scatter_" + pile + ".svg"),
                        "performance scatter: " + pile);
      std::printf("scatter %s: %zu points, front size %zu\n", pile.c_str(), pts.size(),
                  front.size());
    }
  }

  if (!hist_arg.empty()) {
    const auto fields = split_csv_line(hist_arg);
    if (fields.size() != 2) throw ConfigError("--hist expects two field names, e.g. mass,time");
    for (const auto& pile : selected) {
      const auto& rows = by_pile.at(pile);
      HistSpec spec;
      spec.x_bins = bins_x;
      spec.y_bins = bins_y;
      double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const double x = record_field(rows[i], fields[0]);
        const double y = record_field(rows[i], fields[1]);
        if (i == 0) {
          x_lo = x_hi = x;
          y_lo = y_hi = y;
        }
        x_lo = std::min(x_lo, x);
        x_hi = std::max(x_hi, x);
        y_lo = std::min(y_lo, y);
        y_hi = std::max(y_hi, y);
      }
      spec.x_min = x_lo;
      spec.x_max = x_hi > x_lo ? x_hi : x_lo + 1.0;
      spec.y_min = y_lo;
      spec.y_max = y_hi > y_lo ? y_hi : y_lo + 1.0;
      const Histogram2D h = histogram2d(rows, fields[0], fields[1], spec);
      std::string text = "x_lo,x_hi,y_lo,y_hi,count\n";
      const double wx = (spec.x_max - spec.x_min) / static_cast<double>(spec.x_bins);
      const double wy = (spec.y_max - spec.y_min) / static_cast<double>(spec.y_bins);
      for (std::size_t iy = 0; iy < spec.y_bins; ++iy)
        for (std::size_t ix = 0; ix < spec.x_bins; ++ix)
          text += fmt_g(spec.x_min + ix * wx) + "," + fmt_g(spec.x_min + (ix + 1) * wx) + "," +
                  fmt_g(spec.y_min + iy * wy) + "," + fmt_g(spec.y_min + (iy + 1) * wy) + "," +
                  std::to_string(h.at(ix, iy)) + "\n";
      const std::string stem = "hist_" + pile + "_" + fields[0] + "_" + fields[1];
      write_text_file(out / (stem + ".csv"), text);
      write_histogram_svg(h, fields[0], fields[1], out / (stem + ".svg"),
                          "distribution: " + pile);
      std::printf("histogram %s (%s vs %s): %zu records\n", pile.c_str(), fields[0].c_str(),
                  fields[1].c_str(), h.total);
    }
  }

  if (trends) {
    const TrendReport rep = trend_tests(records);
    std::string slope_text = "soil,slope_deg,n_finished,median_m_load_kg\n";
    for (const auto& r : rep.slope_rows)
      slope_text += r.soil + "," + fmt_g(r.slope_deg) + "," + std::to_string(r.n_finished) +
                    "," + fmt_g(r.median_m_load_kg) + "\n";
    write_text_file(out / "slope_trends.csv", slope_text);
    std::string corr_text = "pile_id,n_finished,spearman_alpha2_pe,spearman_alpha2_pp\n";
    for (const auto& r : rep.dig_rows)
      corr_text += r.pile_id + "," + std::to_string(r.n_finished) + "," +
                   fmt_g(r.spearman_alpha2_pe) + "," + fmt_g(r.spearman_alpha2_pp) + "\n";
    write_text_file(out / "dig_speed_corr.csv", corr_text);
    std::printf("slope trends (median load mass by pile):\n");
    for (const auto& r : rep.slope_rows)
      std::printf("  %-8s %4.0f deg  n=%-6zu median m_load=%.1f kg\n", r.soil.c_str(),
                  r.slope_deg, r.n_finished, r.median_m_load_kg);
    std::printf("dig-speed rank correlations:\n");
    for (const auto& r : rep.dig_rows)
      std::printf("  %-12s n=%-6zu rho(alpha2,P_e)=%+.3f  rho(alpha2,P_p)=%+.3f\n",
                  r.pile_id.c_str(), r.n_finished, r.spearman_alpha2_pe, r.spearman_alpha2_pp);
  }

  if (!match_arg.empty()) {
    if (pile_arg.empty()) throw ConfigError("--match requires --pile to name the source pile");
    const auto parts = split_csv_line(match_arg);
    if (parts.size() != 2) throw ConfigError("--match expects \"P_p,P_e\"");
    const MatchReport rep = match_actions(records, pile_arg, parse_double(parts[0], "P_p"),
                                          parse_double(parts[1], "P_e"), radius);
    std::printf("match near (P_p=%g, P_e=%g) r=%g on %s: %zu source runs, %zu action tuples\n",
                rep.target_pp, rep.target_pe, rep.radius, rep.source_pile.c_str(),
                rep.source_matches.size(), rep.alphas.size());
    for (const auto& [pile, rows] : rep.per_pile) {
      std::string text(kResultsHeader);
      text += '\n';
      for (const auto& r : rows) {
        text += format_result_row(r);
        text += '\n';
      }
      write_text_file(out / ("matched_" + pile + ".csv"), text);
      std::printf("  %-12s %zu matching rows\n", pile.c_str(), rows.size());
    }
  }

  std::printf("analysis outputs in %s\n", out.string().c_str());
  return 0;
}

int cmd_poi(const std::string& results_arg, const std::string& pile_arg,
            const std::string& diamond, const std::string& out_arg) {
  const fs::path results_file = resolve_results_file(results_arg);
  const auto by_pile = group_by_pile(load_results_csv(results_file));
  std::vector<std::string> selected;
  if (pile_arg.empty()) {
    for (const auto& [pile, rows] : by_pile) selected.push_back(pile);
    if (!diamond.empty() && selected.size() > 1)
      throw ConfigError("--diamond requires --pile when several piles are present");
  } else {
    if (by_pile.find(pile_arg) == by_pile.end())
      throw ConfigError("no records for pile " + pile_arg);
    selected.push_back(pile_arg);
  }
  for (const auto& pile : selected) {
    const PoiSet poi = select_poi(performance_points(by_pile.at(pile)), diamond);
    print_poi(pile, poi);
    if (!out_arg.empty()) {
      fs::create_directories(out_arg);
      write_poi_csv(fs::path(out_arg) / ("poi_" + pile + ".csv"), poi);
    }
  }
  return 0;
}

int cmd_trajectory(const std::string& config_path, const std::string& results_arg,
                   const std::string& run_id, const std::string& out_arg) {
  const ResolvedConfig cfg = load_config_or_default(config_path);
  const fs::path rdir(results_arg);
  const fs::path manifest_path = fs::is_directory(rdir) ? rdir / "manifest.csv" : rdir;
  const CampaignManifest manifest = read_manifest(manifest_path);
  const ManifestRow* row = nullptr;
  for (const auto& r : manifest.rows)
    if (r.run_id == run_id) row = &r;
  if (row == nullptr) throw ConfigError("run_id not in manifest: " + run_id);

  SimOptions so;
  so.log_series = true;
  const RunResult rr = run_manifest_row(manifest, *row, cfg.machine, cfg.control, so);

  const fs::path out = out_arg.empty() ? manifest_path.parent_path() / "analysis"
                                       : fs::path(out_arg);
  export_trajectory(rr, out);
  sweep_detail::write_events_file(out, run_id, rr.events);

  const LoadingRecord& rec = rr.record;
  std::printf("run %s on %s: flag=%s m_load=%.1f kg t_load=%.2f s W=%.1f kJ spill=%.2f%%\n",
              run_id.c_str(), row->pile_id.c_str(), to_string(rec.flag), rec.m_load_kg,
              rec.t_load_s, rec.w_kj, rec.metrics.s_load);
  std::printf("wrote series_%s.csv, terrain_%s.csv, trajectory_%s.svg, %s.events.csv in %s\n",
              run_id.c_str(), run_id.c_str(), run_id.c_str(), run_id.c_str(),
              out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wheel-loader loading-cycle simulator and sweep driver"};
  app.require_subcommand(1);

  std::string config_path;

  auto* sweep = app.add_subcommand("sweep", "run a simulation campaign over the action grid");
  std::string sweep_piles, sweep_out = "campaign";
  int sweep_workers = 1;
  bool sweep_resume = false, sweep_series = false;
  std::size_t sweep_limit = 0;
  sweep->add_option("--config", config_path, "config file (JSON)");
  sweep->add_option("--piles", sweep_piles,
                    std::string("comma list of soil:slope_deg (default ") + kDefaultPiles + ")");
  sweep->add_option("--workers", sweep_workers, "worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--out", sweep_out, "output directory");
  sweep->add_flag("--resume", sweep_resume, "skip runs already in the part file");
  sweep->add_option("--limit", sweep_limit, "stop after N new runs (0 = no limit)");
  sweep->add_flag("--series", sweep_series, "write per-run time-series CSVs");

  auto* analyze = app.add_subcommand("analyze", "post-process a results file");
  std::string an_results, an_pile, an_hist, an_match, an_out;
  bool an_scatter = false, an_trends = false;
  double an_radius = 0.05;
  std::size_t an_bins = 40;
  analyze->add_option("--config", config_path, "config file (JSON)");
  analyze->add_option("--results", an_results, "campaign directory or results.csv")->required();
  analyze->add_option("--pile", an_pile, "restrict to one pile id, e.g. gravel_30");
  analyze->add_option("--hist", an_hist, "two field names for a 2-D histogram, e.g. mass,time");
  analyze->add_option("--bins", an_bins, "histogram bins per axis");
  analyze->add_flag("--scatter", an_scatter, "emit performance scatter + Pareto front + POI");
  analyze->add_flag("--trends", an_trends, "emit slope/dig-speed trend statistics");
  analyze->add_option("--match", an_match, "target \"P_p,P_e\" for matched-action lookup");
  analyze->add_option("--radius", an_radius, "normalized match radius (default 0.05)");
  analyze->add_option("--out", an_out, "output directory (default <results>/analysis)");

  auto* poi = app.add_subcommand("poi", "print the marked runs for a pile");
  std::string poi_results, poi_pile, poi_diamond, poi_out;
  poi->add_option("--config", config_path, "config file (JSON)");
  poi->add_option("--results", poi_results, "campaign directory or results.csv")->required();
  poi->add_option("--pile", poi_pile, "pile id, e.g. gravel_30");
  poi->add_option("--diamond", poi_diamond, "override the Pareto-choice run_id");
  poi->add_option("--out", poi_out, "also write poi_<pile>.csv here");

  auto* traj = app.add_subcommand("trajectory", "re-simulate one run and export figure data");
  std::string tr_results, tr_run, tr_out;
  traj->add_option("--config", config_path, "config file (JSON)");
  traj->add_option("--results", tr_results, "campaign directory or manifest.csv")->required();
  traj->add_option("--run", tr_run, "run_id from the manifest")->required();
  traj->add_option("--out", tr_out, "output directory (default <campaign>/analysis)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep->parsed())
      return cmd_sweep(config_path, sweep_piles, sweep_workers, sweep_out, sweep_resume,
                       sweep_limit, sweep_series);
    if (analyze->parsed())
      return cmd_analyze(an_results, an_pile, an_hist, an_scatter, an_trends, an_match,
                         an_radius, an_out, an_bins, an_bins);
    if (poi->parsed()) return cmd_poi(poi_results, poi_pile, poi_diamond, poi_out);
    if (traj->parsed()) return cmd_trajectory(config_path, tr_results, tr_run, tr_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
