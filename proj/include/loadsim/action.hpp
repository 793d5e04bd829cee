#pragma once

#include <array>
#include <string>
#include <vector>

#include "loadsim/errors.hpp"

namespace loadsim {

// One loading action: eight scalars that parameterize the whole cycle.
//   alpha1  approach speed fraction of v_drive_max
//   alpha2  dig speed fraction of v_drive_max
//   alpha3  lift-start force threshold, fraction of dig_force_ref
//   alpha4  tilt-start force threshold, fraction of dig_force_ref
//   alpha5  lift speed fraction of v_lift_max while digging
//   alpha6  tilt speed fraction of v_tilt_max while digging
//   alpha7  boom target angle during the dig (deg, negative = lowered)
//   alpha8  bucket target angle during the dig (deg)
struct ActionParams {
  double alpha1 = 0.6;
  double alpha2 = 0.4;
  double alpha3 = 0.0;
  double alpha4 = 0.9;
  double alpha5 = 0.6;
  double alpha6 = 0.6;
  double alpha7_deg = -30.0;
  double alpha8_deg = 45.0;

  std::array<double, 8> as_array() const {
    return {alpha1, alpha2, alpha3, alpha4, alpha5, alpha6, alpha7_deg, alpha8_deg};
  }

  static ActionParams from_array(const std::array<double, 8>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]};
  }

  bool operator==(const ActionParams&) const = default;

  void validate() const {
    auto frac = [](double v, int idx) {
      if (!(v > 0.0 && v <= 1.0))
        throw ConfigError("alpha" + std::to_string(idx) + " must be in (0, 1], got " +
                          std::to_string(v));
    };
    frac(alpha1, 1);
    frac(alpha2, 2);
    auto thresh = [](double v, int idx) {
      if (!(v >= 0.0 && v <= 1.2))
        throw ConfigError("alpha" + std::to_string(idx) + " must be in [0, 1.2], got " +
                          std::to_string(v));
    };
    thresh(alpha3, 3);
    thresh(alpha4, 4);
    frac(alpha5, 5);
    frac(alpha6, 6);
    if (!(alpha7_deg >= -40.0 && alpha7_deg <= -10.0))
      throw ConfigError("alpha7 must be in [-40, -10] deg, got " + std::to_string(alpha7_deg));
    if (!(alpha8_deg > 0.0 && alpha8_deg <= 50.0))
      throw ConfigError("alpha8 must be in (0, 50] deg, got " + std::to_string(alpha8_deg));
  }
};

// Candidate values per parameter, alpha1 first. The cross product of all
// eight lists forms the sweep grid.
struct ActionGridValues {
  std::array<std::vector<double>, 8> values;

  // Stock factorial design: 3*3*5*5*5*5*4*2 = 45000 actions.
  static ActionGridValues stock() {
    ActionGridValues g;
    g.values[0] = {0.4, 0.6, 0.8};
    g.values[1] = {0.2, 0.4, 0.6};
    g.values[2] = {0.0, 0.3, 0.6, 0.9, 1.2};
    g.values[3] = {0.0, 0.3, 0.6, 0.9, 1.2};
    g.values[4] = {0.2, 0.4, 0.6, 0.8, 1.0};
    g.values[5] = {0.2, 0.4, 0.6, 0.8, 1.0};
    g.values[6] = {-40.0, -30.0, -20.0, -10.0};
    g.values[7] = {30.0, 45.0};
    return g;
  }

  std::size_t size() const {
    std::size_t n = 1;
    for (const auto& v : values) n *= v.size();
    return n;
  }
};

// Expands the per-parameter value lists into the full factorial grid in
// lexicographic order with alpha1 varying slowest. Every action is validated.
inline std::vector<ActionParams> build_parameter_grid(const ActionGridValues& grid) {
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    const auto& vals = grid.values[i];
    if (vals.empty())
      throw ConfigError("parameter grid: value list for alpha" + std::to_string(i + 1) +
                        " is empty");
    for (std::size_t a = 0; a < vals.size(); ++a)
      for (std::size_t b = a + 1; b < vals.size(); ++b)
        if (vals[a] == vals[b])
          throw ConfigError("parameter grid: duplicate value in alpha" + std::to_string(i + 1) +
                            " list");
  }
  std::vector<ActionParams> out;
  out.reserve(grid.size());
  std::array<double, 8> a{};
  for (double v1 : grid.values[0]) {
    a[0] = v1;
    for (double v2 : grid.values[1]) {
      a[1] = v2;
      for (double v3 : grid.values[2]) {
        a[2] = v3;
        for (double v4 : grid.values[3]) {
          a[3] = v4;
          for (double v5 : grid.values[4]) {
            a[4] = v5;
            for (double v6 : grid.values[5]) {
              a[5] = v6;
              for (double v7 : grid.values[6]) {
                a[6] = v7;
                for (double v8 : grid.values[7]) {
                  a[7] = v8;
                  ActionParams p = ActionParams::from_array(a);
                  p.validate();
                  out.push_back(p);
                }
              }
            }
          }
        }
      }
    }
  }
  return out;
}

}  // namespace loadsim
