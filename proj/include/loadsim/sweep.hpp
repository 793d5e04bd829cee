#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "loadsim/campaign.hpp"
#include "loadsim/csv.hpp"
#include "loadsim/results.hpp"
#include "loadsim/sim.hpp"

namespace loadsim {

// Durable result sink: completed rows append to a part file (one line per
// run, flushed), and finalize() rewrites the sorted canonical results.csv.
// The part file doubles as the completion index for resume.
class ResultStore {
 public:
  explicit ResultStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path part_path() const { return dir_ / "results.part.csv"; }
  std::filesystem::path results_path() const { return dir_ / "results.csv"; }

  // run_ids already persisted; a torn final line (killed mid-write) is
  // dropped so its run re-executes on resume.
  std::unordered_set<std::string> load_completed() const {
    std::unordered_set<std::string> done;
    if (!std::filesystem::exists(part_path())) return done;
    for (const auto& line : read_lines(part_path())) {
      if (line.empty()) continue;
      try {
        done.insert(parse_result_row(line).run_id);
      } catch (const IoError&) {
        // incomplete tail write; ignore
      }
    }
    return done;
  }

  // Reopening is allowed: a store that already served one pass (e.g. an
  // interrupted campaign now being resumed) starts a fresh append handle.
  void open_for_append() {
    std::lock_guard<std::mutex> lock(mu_);
    if (out_.is_open()) out_.close();
    out_.clear();
    repair_tail();
    out_.open(part_path(), std::ios::binary | std::ios::app);
    if (!out_) throw IoError("cannot open " + part_path().string());
  }

  void append(const std::string& row) {
    std::lock_guard<std::mutex> lock(mu_);
    out_ << row << '\n';
    out_.flush();
    if (!out_) throw IoError("write failed on " + part_path().string());
  }

  // Sorts all persisted rows by run_id and writes the canonical file
  // atomically; the append log is removed afterwards.
  void finalize() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (out_.is_open()) out_.close();
    }
    std::vector<std::string> rows;
    if (std::filesystem::exists(part_path())) {
      for (const auto& line : read_lines(part_path())) {
        if (line.empty()) continue;
        try {
          parse_result_row(line);
        } catch (const IoError&) {
          continue;
        }
        rows.push_back(line);
      }
    }
    std::sort(rows.begin(), rows.end());
    std::string content;
    content.reserve(rows.size() * 200 + 256);
    content += kResultsHeader;
    content += '\n';
    for (const auto& r : rows) {
      content += r;
      content += '\n';
    }
    const auto tmp = results_path().string() + ".tmp";
    write_text_file(tmp, content);
    std::filesystem::rename(tmp, results_path());
    std::filesystem::remove(part_path());
  }

 private:
  // A writer killed mid-append leaves the log without a final newline. If the
  // next pass appended straight onto that stump, its first row would fuse with
  // the half-line and be lost at finalization. Terminating the stump keeps it
  // an isolated bad line that parsing skips, so the interrupted run re-executes.
  void repair_tail() {
    std::error_code ec;
    const auto size = std::filesystem::file_size(part_path(), ec);
    if (ec || size == 0) return;
    std::fstream f(part_path(), std::ios::binary | std::ios::in | std::ios::out);
    if (!f) return;
    f.seekg(-1, std::ios::end);
    char last = 0;
    f.get(last);
    if (last != '\n') {
      f.clear();
      f.seekp(0, std::ios::end);
      f.put('\n');
    }
  }

  std::filesystem::path dir_;
  std::mutex mu_;
  std::ofstream out_;
};

struct SweepOptions {
  int workers = 1;
  bool resume = false;
  std::size_t limit = static_cast<std::size_t>(-1);  // stop after N new rows
  bool log_series = false;
  bool finalize = true;
  SimOptions sim;
};

struct SweepSummary {
  std::size_t manifest_rows = 0;
  std::size_t executed = 0;
  std::size_t skipped_existing = 0;
  double wall_seconds = 0.0;
  double busy_seconds = 0.0;  // summed across workers
  int workers = 1;
  std::map<std::string, std::size_t> flag_counts;
};

namespace sweep_detail {

inline void write_series_file(const std::filesystem::path& dir, const std::string& run_id,
                              const std::vector<SimFrame>& series) {
  std::filesystem::create_directories(dir);
  std::string content;
  content.reserve(series.size() * 160 + 128);
  content += kSeriesHeader;
  content += '\n';
  for (const auto& f : series) {
    content += format_series_row(f);
    content += '\n';
  }
  const auto path = dir / (run_id + ".csv");
  const auto tmp = path.string() + ".tmp";
  write_text_file(tmp, content);
  std::filesystem::rename(tmp, path);
}

inline void write_events_file(const std::filesystem::path& dir, const std::string& run_id,
                              const std::vector<SimEvent>& events) {
  std::filesystem::create_directories(dir);
  std::string content = "event,t\n";
  for (const auto& e : events) {
    content += e.name;
    content += ',';
    content += fmt_g(e.t);
    content += '\n';
  }
  const auto path = dir / (run_id + ".events.csv");
  const auto tmp = path.string() + ".tmp";
  write_text_file(tmp, content);
  std::filesystem::rename(tmp, path);
}

}  // namespace sweep_detail

// Executes every pending manifest row exactly once across `workers` threads.
// Per-run failures become flagged rows; the final artifact is independent of
// worker count and scheduling because rows are value-deterministic and the
// store sorts on finalization.
inline SweepSummary execute_campaign(const CampaignManifest& manifest,
                                     const MachineSpec& machine, const ControlConstants& k,
                                     ResultStore& store, const SweepOptions& opt = {}) {
  if (opt.workers < 1) throw ConfigError("sweep: workers must be >= 1");
  const auto wall_start = std::chrono::steady_clock::now();

  SweepSummary sum;
  sum.manifest_rows = manifest.rows.size();
  sum.workers = opt.workers;

  std::unordered_set<std::string> done;
  if (opt.resume) {
    done = store.load_completed();
  } else if (std::filesystem::exists(store.part_path())) {
    std::filesystem::remove(store.part_path());
  }

  std::vector<const ManifestRow*> pending;
  pending.reserve(manifest.rows.size());
  for (const auto& row : manifest.rows) {
    if (done.count(row.run_id)) {
      ++sum.skipped_existing;
      continue;
    }
    pending.push_back(&row);
  }
  if (pending.size() > opt.limit) pending.resize(opt.limit);

  store.open_for_append();

  std::atomic<std::size_t> next{0};
  std::mutex sum_mu;
  auto worker = [&]() {
    double busy = 0.0;
    std::map<std::string, std::size_t> flags;
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= pending.size()) break;
      const ManifestRow& row = *pending[i];
      LoadingRecord rec;
      try {
        SimOptions so = opt.sim;
        so.log_series = opt.log_series;
        RunResult res = run_manifest_row(manifest, row, machine, k, so);
        busy += res.busy_seconds;
        rec = res.record;
        if (opt.log_series) {
          sweep_detail::write_series_file(store.dir() / "runs", row.run_id, res.series);
          sweep_detail::write_events_file(store.dir() / "runs", row.run_id, res.events);
        }
      } catch (const std::exception&) {
        // Setup-level failure: keep the campaign going with a flagged row.
        const PileSpec& pile = manifest.pile_for(row);
        rec.run_id = row.run_id;
        rec.soil = pile.soil.name;
        rec.slope_deg = pile.slope_deg;
        rec.action = row.action;
        rec.flag = RunFlag::numeric_error;
      }
      store.append(format_result_row(rec));
      ++flags[to_string(rec.flag)];
    }
    std::lock_guard<std::mutex> lock(sum_mu);
    sum.busy_seconds += busy;
    for (const auto& [name, count] : flags) sum.flag_counts[name] += count;
  };

  if (opt.workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(opt.workers);
    for (int w = 0; w < opt.workers; ++w) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
  }

  for (const auto& [name, count] : sum.flag_counts) sum.executed += count;

  if (opt.finalize && sum.skipped_existing + sum.executed >= manifest.rows.size())
    store.finalize();

  sum.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return sum;
}

struct ThroughputReport {
  double runs_per_cpu_hour = 0.0;   // from summed in-loop busy time
  double runs_per_wall_hour = 0.0;
};

inline ThroughputReport throughput_report(const SweepSummary& sum) {
  ThroughputReport r;
  if (sum.busy_seconds > 0.0) r.runs_per_cpu_hour = sum.executed / (sum.busy_seconds / 3600.0);
  if (sum.wall_seconds > 0.0) r.runs_per_wall_hour = sum.executed / (sum.wall_seconds / 3600.0);
  return r;
}

}  // namespace loadsim
