#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "loadsim/action.hpp"
#include "loadsim/csv.hpp"
#include "loadsim/errors.hpp"
#include "loadsim/specs.hpp"

namespace loadsim {

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace detail {
// %.12g canonical text of every quantity that distinguishes a run. The hash
// of this string is both the run id and the per-run RNG seed, so it must be
// stable: never reorder or reformat these fields.
inline std::string run_key(const PileSpec& pile, const ActionParams& a) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%s|%.12g|%.12g|%.12g|%.12g|%.12g|%.12g|%.12g|%.12g|"
                "%.12g|%.12g|%.12g|%.12g|%.12g|%.12g|%.12g|%.12g",
                pile.soil.name.c_str(), pile.soil.phi_internal_deg,
                pile.soil.psi_dilatancy_deg, pile.soil.cohesion_kpa, pile.soil.density_kg_m3,
                pile.slope_deg, pile.toe_x_m, pile.crest_height_m, pile.grid_dx_m,
                a.alpha1, a.alpha2, a.alpha3, a.alpha4, a.alpha5, a.alpha6, a.alpha7_deg,
                a.alpha8_deg);
  return buf;
}
}  // namespace detail

inline std::string run_id_for(const PileSpec& pile, const ActionParams& a) {
  return hex64(fnv1a64(detail::run_key(pile, a)));
}

// Stable fingerprint of the machine parameters so a results directory can be
// checked against the machine it was produced with.
inline std::string machine_fingerprint(const MachineSpec& m) {
  char buf[640];
  std::snprintf(buf, sizeof(buf),
                "%.12g|%.12g|%.12g|%.12g|%.12g|%.12g|%.12g|%.12g|%.12g|%.12g|%.12g|"
                "%.12g|%.12g|%.12g|%.12g|%.12g|%.12g|%.12g|%.12g|%.12g|%.12g",
                m.operating_mass_kg, m.wheelbase_m, m.bucket_capacity_m3, m.bucket_width_m,
                m.wheel_radius_m, m.wheel_friction, m.drive_speed_max_kmh,
                m.drive_torque_limit_nm, m.lift_speed_min_ms, m.lift_speed_max_ms,
                m.lift_force_limit_n, m.tilt_speed_min_ms, m.tilt_speed_max_ms,
                m.tilt_force_limit_n, m.lever_arm_m, m.boom_pivot_back_m, m.boom_pivot_height_m,
                m.boom_length_m, m.bucket_tip_offset_m, m.boom_inertia_kg_m2,
                m.bucket_inertia_kg_m2);
  return hex64(fnv1a64(buf));
}

struct ManifestRow {
  std::string run_id;
  std::string pile_id;
  ActionParams action;
  std::uint64_t seed = 0;
};

struct CampaignManifest {
  int schema_version = 1;
  std::string machine_hash;  // see machine_fingerprint
  std::map<std::string, PileSpec> piles;  // by pile id
  std::vector<ManifestRow> rows;

  const PileSpec& pile_for(const ManifestRow& row) const {
    auto it = piles.find(row.pile_id);
    if (it == piles.end()) throw ConfigError("manifest references unknown pile " + row.pile_id);
    return it->second;
  }
};

// Full cross product piles x actions, in pile order then grid order.
// Run ids must be unique across the campaign; a collision is a hard error.
inline CampaignManifest enumerate_campaign(const std::vector<PileSpec>& piles,
                                           const std::vector<ActionParams>& actions) {
  CampaignManifest m;
  if (piles.empty()) throw ConfigError("campaign: no piles");
  if (actions.empty()) throw ConfigError("campaign: no actions");
  for (const auto& p : piles) {
    p.validate();
    if (!m.piles.emplace(p.id(), p).second)
      throw ConfigError("campaign: duplicate pile id " + p.id());
  }
  m.rows.reserve(piles.size() * actions.size());
  std::unordered_set<std::string> seen;
  seen.reserve(m.rows.capacity() * 2);
  for (const auto& p : piles) {
    const std::string pid = p.id();
    for (const auto& a : actions) {
      ManifestRow row;
      row.run_id = run_id_for(p, a);
      row.pile_id = pid;
      row.action = a;
      row.seed = fnv1a64(row.run_id);
      if (!seen.insert(row.run_id).second)
        throw ConfigError("campaign: run id collision at " + row.run_id);
      m.rows.push_back(std::move(row));
    }
  }
  return m;
}

inline const char* kManifestHeader =
    "run_id,pile_id,soil,phi_internal_deg,psi_dilatancy_deg,cohesion_kpa,density_kg_m3,"
    "slope_deg,toe_x_m,crest_height_m,grid_dx_m,"
    "alpha1,alpha2,alpha3,alpha4,alpha5,alpha6,alpha7_deg,alpha8_deg,seed";

inline std::string format_manifest_row(const CampaignManifest& m, const ManifestRow& r) {
  const PileSpec& p = m.pile_for(r);
  std::string s;
  s.reserve(256);
  s += r.run_id;
  s += ',';
  s += r.pile_id;
  s += ',';
  s += p.soil.name;
  for (double v : {p.soil.phi_internal_deg, p.soil.psi_dilatancy_deg, p.soil.cohesion_kpa,
                   p.soil.density_kg_m3, p.slope_deg, p.toe_x_m, p.crest_height_m,
                   p.grid_dx_m}) {
    s += ',';
    s += fmt_g(v);
  }
  for (double v : r.action.as_array()) {
    s += ',';
    s += fmt_g(v);
  }
  s += ',';
  s += hex64(r.seed);
  return s;
}

inline void write_manifest(const CampaignManifest& m, const std::filesystem::path& path) {
  std::string out;
  out.reserve(m.rows.size() * 160 + 256);
  out += kManifestHeader;
  out += '\n';
  for (const auto& r : m.rows) {
    out += format_manifest_row(m, r);
    out += '\n';
  }
  write_text_file(path, out);
}

inline CampaignManifest read_manifest(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  if (lines.empty() || lines.front() != kManifestHeader)
    throw IoError("manifest " + path.string() + ": missing or unexpected header");
  CampaignManifest m;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = split_csv_line(lines[i]);
    if (f.size() != 20) throw IoError("manifest row " + std::to_string(i) + ": bad field count");
    const std::string where = "manifest row " + std::to_string(i);
    PileSpec p;
    p.soil.name = f[2];
    p.soil.phi_internal_deg = parse_double(f[3], where);
    p.soil.psi_dilatancy_deg = parse_double(f[4], where);
    p.soil.cohesion_kpa = parse_double(f[5], where);
    p.soil.density_kg_m3 = parse_double(f[6], where);
    p.slope_deg = parse_double(f[7], where);
    p.toe_x_m = parse_double(f[8], where);
    p.crest_height_m = parse_double(f[9], where);
    p.grid_dx_m = parse_double(f[10], where);
    ManifestRow r;
    r.run_id = f[0];
    r.pile_id = f[1];
    std::array<double, 8> a{};
    for (int k = 0; k < 8; ++k) a[k] = parse_double(f[11 + k], where);
    r.action = ActionParams::from_array(a);
    r.seed = std::stoull(f[19], nullptr, 16);
    auto it = m.piles.find(r.pile_id);
    if (it == m.piles.end()) {
      m.piles.emplace(r.pile_id, p);
    }
    m.rows.push_back(std::move(r));
  }
  return m;
}

}  // namespace loadsim
