#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "loadsim/errors.hpp"
#include "loadsim/specs.hpp"
#include "loadsim/units.hpp"

namespace loadsim {

// Passive-pressure factors of the trial-wedge earthmoving model. The blade
// force per unit width is rho*g*d^2*N_gamma + c*d*N_c at cutting depth d.
struct WedgeCoefficients {
  double n_gamma = 0.0;
  double n_c = 0.0;
};

namespace wedge_detail {

// Weight term of the wedge equilibrium for failure-plane angle beta.
inline double n_gamma_at(double beta, double phi, double delta, double rake) {
  return (1.0 / std::tan(rake) + 1.0 / std::tan(beta)) * std::sin(beta + phi) /
         (2.0 * std::sin(rake + delta + beta + phi));
}

// Cohesion term.
inline double n_c_at(double beta, double phi, double delta, double rake) {
  return std::cos(phi) / (std::sin(beta) * std::sin(rake + delta + beta + phi));
}

template <class F>
double golden_min(F f, double a, double b, double tol) {
  constexpr double invphi = 0.6180339887498949;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

template <class F>
double minimize_over_wedge(F f, double lo, double hi, double coarse_step, double tol) {
  double best_x = lo;
  double best_f = f(lo);
  for (double x = lo + coarse_step; x <= hi + 1e-15; x += coarse_step) {
    double fx = f(x);
    if (fx < best_f) {
      best_f = fx;
      best_x = x;
    }
  }
  double a = std::max(lo, best_x - coarse_step);
  double b = std::min(hi, best_x + coarse_step);
  double xm = golden_min(f, a, b, tol);
  return f(xm) < best_f ? f(xm) : best_f;
}

}  // namespace wedge_detail

// Minimizing passive coefficients over trial failure-plane angles in
// (0, 90) deg: 0.1 deg coarse scan plus golden-section refinement to 1e-4 deg.
inline WedgeCoefficients passive_wedge_coefficients(double phi_deg, double delta_deg,
                                                    double rake_deg) {
  if (!(phi_deg >= 0.0 && phi_deg < 90.0))
    throw ModelError("wedge: phi must be in [0, 90) deg");
  if (!(delta_deg >= 0.0 && delta_deg <= phi_deg))
    throw ModelError("wedge: delta must be in [0, phi]");
  if (!(rake_deg > 0.0 && rake_deg < 90.0))
    throw ModelError("wedge: rake must be in (0, 90) deg");

  // The wedge equilibrium denominator requires rake + delta + beta + phi < 180.
  const double beta_cap_deg = std::min(90.0, 180.0 - rake_deg - delta_deg - phi_deg);
  if (beta_cap_deg <= 0.2)
    throw ModelError("wedge: degenerate geometry, no feasible failure angle for rake " +
                     std::to_string(rake_deg) + " deg");

  const double phi = deg2rad(phi_deg);
  const double delta = deg2rad(delta_deg);
  const double rake = deg2rad(rake_deg);
  const double lo = deg2rad(0.1);
  const double hi = deg2rad(beta_cap_deg - 0.1);
  const double step = deg2rad(0.1);
  const double tol = deg2rad(1e-4);

  WedgeCoefficients w;
  w.n_gamma = wedge_detail::minimize_over_wedge(
      [&](double b) { return wedge_detail::n_gamma_at(b, phi, delta, rake); }, lo, hi, step, tol);
  w.n_c = wedge_detail::minimize_over_wedge(
      [&](double b) { return wedge_detail::n_c_at(b, phi, delta, rake); }, lo, hi, step, tol);
  return w;
}

// Soil force on the bucket. `horizontal` is stored as a resistance: positive
// opposes +x travel of the machine, so the drive equation subtracts it as-is.
// `vertical` is the world-z force on the bucket (positive up). The three
// component magnitudes are kept for diagnostics and threshold logic.
struct DigForce {
  double horizontal = 0.0;
  double vertical = 0.0;
  double magnitude = 0.0;
  double penetration = 0.0;
  double separation = 0.0;
  double inertial = 0.0;
  double depth = 0.0;
};

struct ExcavateResult {
  double removed_volume = 0.0;
  double captured_volume = 0.0;
  double pushed_volume = 0.0;
};

struct ProvenanceRow {
  double x = 0.0;
  double height_initial = 0.0;
  double height_final = 0.0;
  double mass_loaded = 0.0;     // ended up in the bucket, by column of origin
  double mass_displaced = 0.0;  // left its column but stayed on the ground
};

namespace terrain_detail {

// Mass that arrived in a column from somewhere else. `origin` is the column
// the mass started the simulation in; `spilled` marks mass that passed
// through the bucket and leaked back out.
struct MassParcel {
  std::int32_t origin = 0;
  bool spilled = false;
  double mass = 0.0;
};

struct ColumnLedger {
  double original = 0.0;  // never left this column
  std::vector<MassParcel> parcels;

  double total() const {
    double s = original;
    for (const auto& p : parcels) s += p.mass;
    return s;
  }

  void add(std::int32_t origin, bool spilled, double mass) {
    if (mass <= 0.0) return;
    for (auto& p : parcels) {
      if (p.origin == origin && p.spilled == spilled) {
        p.mass += mass;
        return;
      }
    }
    parcels.push_back({origin, spilled, mass});
  }
};

struct RemovedPart {
  std::int32_t origin;
  bool spilled;
  double mass;
};

}  // namespace terrain_detail

// 1D height-field pile over columns of spacing grid_dx with a per-column
// mass-provenance ledger. Heights are always derived from ledger masses
// (h = m / (rho * width * dx)); every transfer moves exact paired amounts so
// total mass is conserved to summation rounding.
class PileState {
 public:
  PileState(const PileSpec& spec, double width_m, double domain_length_m)
      : spec_(spec), width_(width_m) {
    spec_.validate();
    if (!(width_m > 0.0)) throw ModelError("pile: width must be > 0");
    const double ramp_end = spec_.toe_x_m + spec_.ramp_length_m();
    if (domain_length_m < ramp_end + 1.0)
      throw ModelError("pile: domain length " + std::to_string(domain_length_m) +
                       " m too short to contain the ramp ending at " + std::to_string(ramp_end) +
                       " m");
    n_ = static_cast<int>(std::ceil(domain_length_m / spec_.grid_dx_m));
    col_mass_ = spec_.soil.density_kg_m3 * width_ * spec_.grid_dx_m;  // kg per m of height
    columns_.resize(n_);
    heights_.resize(n_);
    init_heights_.resize(n_);
    init_col_mass_.resize(n_);

    const double dx = spec_.grid_dx_m;
    const double tan_s = std::tan(deg2rad(spec_.slope_deg));
    const double toe = spec_.toe_x_m;
    for (int i = 0; i < n_; ++i) {
      const double a = i * dx;
      const double b = a + dx;
      // Exact integral of the ramp-and-plateau profile over the cell.
      double area = 0.0;
      const double r0 = std::max(a, toe);
      const double r1 = std::min(b, ramp_end);
      if (r1 > r0) area += 0.5 * tan_s * ((r1 - toe) * (r1 - toe) - (r0 - toe) * (r0 - toe));
      const double p0 = std::max(a, ramp_end);
      if (b > p0) area += spec_.crest_height_m * (b - p0);
      const double h = area / dx;
      heights_[i] = h;
      init_heights_[i] = h;
      columns_[i].original = h * col_mass_;
      init_col_mass_[i] = columns_[i].original;
      initial_mass_ += columns_[i].original;
    }
  }

  const PileSpec& spec() const { return spec_; }
  int columns() const { return n_; }
  double dx() const { return spec_.grid_dx_m; }
  double width() const { return width_; }
  double domain_length() const { return n_ * spec_.grid_dx_m; }
  double x_center(int i) const { return (i + 0.5) * spec_.grid_dx_m; }
  double height(int i) const { return heights_[i]; }
  double initial_height(int i) const { return init_heights_[i]; }

  int column_of(double x) const {
    int i = static_cast<int>(std::floor(x / spec_.grid_dx_m));
    return std::clamp(i, 0, n_ - 1);
  }

  // Piecewise-linear surface between column centers, clamped at the ends.
  double surface_height(double x) const {
    const double u = x / spec_.grid_dx_m - 0.5;
    if (u <= 0.0) return heights_.front();
    if (u >= n_ - 1) return heights_.back();
    const int i = static_cast<int>(std::floor(u));
    const double f = u - i;
    return heights_[i] * (1.0 - f) + heights_[i + 1] * f;
  }

  double initial_mass() const { return initial_mass_; }

  double ground_mass() const {
    double s = 0.0;
    for (const auto& c : columns_) s += c.total();
    return s;
  }

  double loaded_mass() const { return bucket_mass_; }
  double loaded_volume() const { return bucket_mass_ / spec_.soil.density_kg_m3; }

  // Mass sitting on the ground that once passed through the bucket.
  double spilled_ground_mass() const {
    double s = 0.0;
    for (const auto& c : columns_)
      for (const auto& p : c.parcels)
        if (p.spilled) s += p.mass;
    return s;
  }

  double pile_mass() const { return ground_mass() - spilled_ground_mass(); }

  double conservation_error() const {
    double bucket = 0.0;
    for (const auto& [origin, m] : bucket_by_origin_) bucket += m;
    return std::abs(initial_mass_ - ground_mass() - bucket) / initial_mass_;
  }

  // Cached wedge factors for this soil, keyed by rake quantized to 0.1 deg.
  const WedgeCoefficients& wedge(double rake_deg) const {
    const long key = std::lround(rake_deg * 10.0);
    auto it = wedge_cache_.find(key);
    if (it != wedge_cache_.end()) return it->second;
    const double phi = spec_.soil.phi_internal_deg;
    WedgeCoefficients w = passive_wedge_coefficients(phi, 2.0 / 3.0 * phi, key / 10.0);
    return wedge_cache_.emplace(key, w).first->second;
  }

  DigForce dig_resistance(Vec2 tip, Vec2 tip_vel, double bucket_angle_rad) const {
    DigForce f;
    const double d = surface_height(tip.x) - tip.z;
    if (d <= 0.0) return f;
    f.depth = d;

    const double rake_deg =
        std::clamp(90.0 - rad2deg(bucket_angle_rad), kRakeMinDeg, kRakeMaxDeg);
    const WedgeCoefficients& w = wedge(rake_deg);

    const double phi = deg2rad(spec_.soil.phi_internal_deg);
    const double c_pa = spec_.soil.cohesion_kpa * 1000.0;
    const double gamma = spec_.soil.density_kg_m3 * kGravity;

    f.penetration = width_ * kPenetrationCoeff * (c_pa + gamma * (d / 2.0) * std::tan(phi)) * d;
    const double n_a = std::tan(deg2rad(45.0) + phi / 2.0);
    f.inertial = width_ * spec_.soil.density_kg_m3 * d * tip_vel.x * tip_vel.x * n_a;

    // The shear wedge resists the edge advancing into the face; a retreating
    // blade only drags (penetration + inertial terms). At rest the wedge is
    // reported at its yield value, opposing forward travel, so threshold
    // logic sees the force needed to break the face loose.
    const double fwd = tip_vel.x >= 0.0 ? 1.0 : -1.0;
    Vec2 force{-fwd * (f.penetration + f.inertial), 0.0};
    if (tip_vel.x >= 0.0) {
      f.separation = width_ * (gamma * d * d * w.n_gamma + c_pa * d * w.n_c);
      const double speed = tip_vel.norm();
      if (speed > 1e-9) {
        force.x += f.separation * (-tip_vel.x / speed);
        force.z += f.separation * (-tip_vel.z / speed);
      } else {
        force.x -= f.separation;
      }
    }
    f.horizontal = -force.x;
    f.vertical = force.z;
    f.magnitude = force.norm();
    return f;
  }

  // Sweeps the blade from tip0 to tip1 over dt: removes width * mean-depth *
  // forward-travel worth of soil from the traversed columns. The fraction
  // eta = clamp(0.5 + bucket_angle/90deg, 0, 1) of the removed mass is
  // captured into the bucket, but never beyond the carry headroom granted by
  // the caller; the balance is pushed onto the three columns ahead of the
  // tip (weights 0.5/0.3/0.2) -- a full bucket bulldozes.
  ExcavateResult excavate_step(Vec2 tip0, Vec2 tip1, double bucket_angle_rad, double dt,
                               double capture_headroom_m3 =
                                   std::numeric_limits<double>::infinity()) {
    ExcavateResult r;
    if (!(dt > 0.0)) throw ModelError("excavate: dt must be > 0");
    const double forward = tip1.x - tip0.x;
    if (forward <= 0.0) return r;
    const double d0 = std::max(0.0, surface_height(tip0.x) - tip0.z);
    const double d1 = std::max(0.0, surface_height(tip1.x) - tip1.z);
    const double d_mean = 0.5 * (d0 + d1);
    if (d_mean <= 0.0) return r;

    const double eta =
        std::clamp(0.5 + rad2deg(bucket_angle_rad) / 90.0, 0.0, 1.0);
    const double dx = spec_.grid_dx_m;
    const int dep = column_of(tip1.x);
    const int i_lo = column_of(tip0.x);
    const int i_hi = column_of(tip1.x);

    double headroom_mass =
        std::max(0.0, capture_headroom_m3) * spec_.soil.density_kg_m3;
    double removed_mass = 0.0;
    double captured_mass = 0.0;
    double pushed_mass = 0.0;
    for (int i = i_lo; i <= i_hi; ++i) {
      const double a = std::max(tip0.x, i * dx);
      const double b = std::min(tip1.x, (i + 1) * dx);
      if (b <= a) continue;
      const double dh = d_mean * (b - a) / dx;
      const double qty = std::min(dh, heights_[i]) * col_mass_;
      if (qty <= 0.0) continue;
      removed_parts_.clear();
      remove_from_column(i, qty, removed_parts_);
      for (const auto& part : removed_parts_) {
        removed_mass += part.mass;
        const double cap_q = std::min(eta * part.mass, headroom_mass);
        const double push_q = part.mass - cap_q;
        headroom_mass -= cap_q;
        if (cap_q > 0.0) {
          bucket_by_origin_[part.origin] += cap_q;
          bucket_mass_ += cap_q;
          captured_mass += cap_q;
        }
        if (push_q > 0.0) {
          const double q1 = 0.5 * push_q;
          const double q2 = 0.3 * push_q;
          const double q3 = push_q - q1 - q2;
          deposit(dep + 1, part.origin, part.spilled, q1);
          deposit(dep + 2, part.origin, part.spilled, q2);
          deposit(dep + 3, part.origin, part.spilled, q3);
          pushed_mass += push_q;
        }
      }
    }
    const double rho = spec_.soil.density_kg_m3;
    r.removed_volume = removed_mass / rho;
    r.captured_volume = captured_mass / rho;
    r.pushed_volume = pushed_mass / rho;
    return r;
  }

  // Leaks bucket content back onto the ground at x, marked as spill.
  // Returns the mass actually dropped.
  double spill_from_bucket(double volume_m3, double x) {
    if (volume_m3 <= 0.0 || bucket_mass_ <= 0.0) return 0.0;
    const double want = volume_m3 * spec_.soil.density_kg_m3;
    const double qty = std::min(want, bucket_mass_);
    const int col = column_of(x);

    // Proportional withdrawal across origins, remainder-corrected so the
    // removed parts sum to qty exactly.
    const double f = qty / bucket_mass_;
    double taken = 0.0;
    auto largest = bucket_by_origin_.end();
    removed_parts_.clear();
    for (auto it = bucket_by_origin_.begin(); it != bucket_by_origin_.end(); ++it) {
      if (largest == bucket_by_origin_.end() || it->second > largest->second) largest = it;
      const double part = f * it->second;
      removed_parts_.push_back({it->first, true, part});
      taken += part;
    }
    const double residue = qty - taken;
    for (auto& part : removed_parts_) {
      if (largest != bucket_by_origin_.end() && part.origin == largest->first) {
        part.mass += residue;
        break;
      }
    }
    for (const auto& part : removed_parts_) {
      if (part.mass <= 0.0) continue;
      bucket_by_origin_[part.origin] -= part.mass;
      bucket_mass_ -= part.mass;
      columns_[col].add(part.origin, true, part.mass);
      heights_[col] += part.mass / col_mass_;
    }
    return qty;
  }

  // Sandpile relaxation: moves half the excess over the repose height
  // difference downhill until stable. Fixed sweep order (left-to-right then
  // right-to-left) keeps the result deterministic. Returns sweep count.
  int relax_slopes() {
    const double max_diff = spec_.grid_dx_m * std::tan(deg2rad(spec_.soil.phi_internal_deg));
    const double tol = 1e-12;
    int sweeps = 0;
    while (true) {
      if (++sweeps > kMaxRelaxSweeps)
        throw ModelError("relax_slopes: no convergence after 10000 sweeps");
      bool changed = false;
      for (int i = 0; i + 1 < n_; ++i) changed |= settle_pair(i, max_diff, tol);
      for (int i = n_ - 2; i >= 0; --i) changed |= settle_pair(i, max_diff, tol);
      if (!changed) break;
    }
    resync_heights();
    return sweeps;
  }

  std::vector<std::pair<double, double>> surface_profile() const {
    std::vector<std::pair<double, double>> out;
    out.reserve(n_);
    for (int i = 0; i < n_; ++i) out.emplace_back(x_center(i), heights_[i]);
    return out;
  }

  // Per-origin-column accounting at the current instant.
  std::vector<ProvenanceRow> provenance() const {
    std::vector<ProvenanceRow> rows(n_);
    for (int i = 0; i < n_; ++i) {
      ProvenanceRow& r = rows[i];
      r.x = x_center(i);
      r.height_initial = init_heights_[i];
      r.height_final = heights_[i];
      auto it = bucket_by_origin_.find(i);
      r.mass_loaded = it == bucket_by_origin_.end() ? 0.0 : it->second;
      r.mass_displaced = init_col_mass_[i] - columns_[i].original - r.mass_loaded;
      if (r.mass_displaced < 0.0 && r.mass_displaced > -1e-6) r.mass_displaced = 0.0;
    }
    return rows;
  }

  // Ledger self-check: heights mirror ledger sums and nothing went negative.
  void check_ledger() const {
    for (int i = 0; i < n_; ++i) {
      if (columns_[i].original < -1e-9)
        throw ModelError("ledger: negative original mass in column " + std::to_string(i));
      double t = columns_[i].original;
      for (const auto& p : columns_[i].parcels) {
        if (p.mass < -1e-9) throw ModelError("ledger: negative parcel mass");
        t += p.mass;
      }
      if (std::abs(t / col_mass_ - heights_[i]) > 1e-9)
        throw ModelError("ledger: height out of sync in column " + std::to_string(i));
    }
    for (const auto& [origin, m] : bucket_by_origin_)
      if (m < -1e-9) throw ModelError("ledger: negative bucket mass");
  }

  static constexpr double kPenetrationCoeff = 0.35;
  static constexpr double kRakeMinDeg = 20.0;
  static constexpr double kRakeMaxDeg = 85.0;
  static constexpr int kMaxRelaxSweeps = 10000;

 private:
  void deposit(int col, std::int32_t origin, bool spilled, double mass) {
    if (mass <= 0.0) return;
    col = std::clamp(col, 0, n_ - 1);
    columns_[col].add(origin, spilled, mass);
    heights_[col] += mass / col_mass_;
  }

  // Withdraws qty proportionally from the column's original mass and parcels.
  // The parts sum to min(qty, column total) exactly (remainder-corrected).
  void remove_from_column(int i, double qty, std::vector<terrain_detail::RemovedPart>& parts) {
    terrain_detail::ColumnLedger& c = columns_[i];
    const double total = c.total();
    if (total <= 0.0) return;
    if (qty >= total) {
      if (c.original > 0.0) parts.push_back({i, false, c.original});
      for (const auto& p : c.parcels)
        if (p.mass > 0.0) parts.push_back({p.origin, p.spilled, p.mass});
      c.original = 0.0;
      c.parcels.clear();
      heights_[i] = 0.0;
      return;
    }
    const double f = qty / total;
    double taken = 0.0;
    double best = c.original;
    std::size_t best_idx = static_cast<std::size_t>(-1);  // -1 = original slot
    parts.push_back({static_cast<std::int32_t>(i), false, f * c.original});
    taken += parts.back().mass;
    const std::size_t first = parts.size() - 1;
    for (std::size_t k = 0; k < c.parcels.size(); ++k) {
      const double part = f * c.parcels[k].mass;
      parts.push_back({c.parcels[k].origin, c.parcels[k].spilled, part});
      taken += part;
      if (c.parcels[k].mass > best) {
        best = c.parcels[k].mass;
        best_idx = k;
      }
    }
    // Pin the rounding residue on the largest source so it cannot go negative.
    const double residue = qty - taken;
    const std::size_t fix =
        best_idx == static_cast<std::size_t>(-1) ? first : first + 1 + best_idx;
    parts[fix].mass += residue;

    c.original -= parts[first].mass;
    for (std::size_t k = 0; k < c.parcels.size(); ++k) c.parcels[k].mass -= parts[first + 1 + k].mass;
    std::erase_if(c.parcels, [](const terrain_detail::MassParcel& p) { return p.mass <= 0.0; });
    heights_[i] -= qty / col_mass_;
    // Drop zero-mass entries from the reported parts as well.
    std::erase_if(parts, [](const terrain_detail::RemovedPart& p) { return p.mass <= 0.0; });
  }

  bool settle_pair(int i, double max_diff, double tol) {
    const double hi = heights_[i];
    const double hj = heights_[i + 1];
    int src, dst;
    double excess;
    if (hi - hj > max_diff + tol) {
      src = i;
      dst = i + 1;
      excess = hi - hj - max_diff;
    } else if (hj - hi > max_diff + tol) {
      src = i + 1;
      dst = i;
      excess = hj - hi - max_diff;
    } else {
      return false;
    }
    const double qty = 0.5 * excess * col_mass_;
    removed_parts_.clear();
    remove_from_column(src, qty, removed_parts_);
    for (const auto& part : removed_parts_)
      deposit(dst, part.origin, part.spilled, part.mass);
    return true;
  }

  void resync_heights() {
    for (int i = 0; i < n_; ++i) heights_[i] = columns_[i].total() / col_mass_;
  }

  PileSpec spec_;
  double width_ = 0.0;
  int n_ = 0;
  double col_mass_ = 0.0;  // rho * width * dx
  double initial_mass_ = 0.0;
  std::vector<terrain_detail::ColumnLedger> columns_;
  std::vector<double> heights_;
  std::vector<double> init_heights_;
  std::vector<double> init_col_mass_;
  std::map<std::int32_t, double> bucket_by_origin_;
  double bucket_mass_ = 0.0;
  std::vector<terrain_detail::RemovedPart> removed_parts_;  // scratch
  mutable std::unordered_map<long, WedgeCoefficients> wedge_cache_;
};

}  // namespace loadsim
