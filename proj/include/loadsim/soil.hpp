#pragma once

#include <string>

#include "loadsim/errors.hpp"

namespace loadsim {

// Mohr-Coulomb material parameters for a granular pile.
struct SoilSpec {
  std::string name;
  double phi_internal_deg = 0.0;   // internal friction angle
  double psi_dilatancy_deg = 0.0;  // dilatancy angle
  double cohesion_kpa = 0.0;
  double density_kg_m3 = 0.0;     // bulk density

  void validate() const {
    if (name.empty()) throw ConfigError("soil: name must be non-empty");
    if (!(phi_internal_deg > 0.0 && phi_internal_deg < 90.0))
      throw ConfigError("soil '" + name + "': phi_internal_deg must be in (0, 90), got " +
                        std::to_string(phi_internal_deg));
    if (!(psi_dilatancy_deg >= 0.0 && psi_dilatancy_deg < phi_internal_deg))
      throw ConfigError("soil '" + name + "': psi_dilatancy_deg must be in [0, phi), got " +
                        std::to_string(psi_dilatancy_deg));
    if (!(cohesion_kpa >= 0.0))
      throw ConfigError("soil '" + name + "': cohesion_kpa must be >= 0");
    if (!(density_kg_m3 > 0.0))
      throw ConfigError("soil '" + name + "': density_kg_m3 must be > 0");
  }
};

inline SoilSpec soil_gravel() { return {"gravel", 44.0, 11.0, 0.0, 1400.0}; }
inline SoilSpec soil_sand() { return {"sand", 39.0, 9.0, 0.0, 1400.0}; }
inline SoilSpec soil_dirt() { return {"dirt", 40.0, 13.0, 2.1, 1400.0}; }

// Builtin lookup; returns false when `name` is not one of the three stock soils.
inline bool builtin_soil(const std::string& name, SoilSpec& out) {
  if (name == "gravel") { out = soil_gravel(); return true; }
  if (name == "sand") { out = soil_sand(); return true; }
  if (name == "dirt") { out = soil_dirt(); return true; }
  return false;
}

}  // namespace loadsim
