#pragma once

#include <cmath>

namespace loadsim {

inline constexpr double kGravity = 9.81;  // m/s^2
inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }
constexpr double kmh_to_ms(double kmh) { return kmh / 3.6; }

struct Vec2 {
  double x = 0.0;
  double z = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, z + o.z}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, z - o.z}; }
  Vec2 operator*(double s) const { return {x * s, z * s}; }
  double norm() const { return std::hypot(x, z); }
};

// z-component of the 2D cross product r x f, i.e. the torque about the
// out-of-plane axis produced by force f applied at offset r.
inline double cross2(Vec2 r, Vec2 f) { return r.x * f.z - r.z * f.x; }

}  // namespace loadsim
