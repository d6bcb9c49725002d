#pragma once

#include <algorithm>
#include <array>
#include <stdexcept>

namespace safeset {

// Longitudinal two-vehicle state: inter-vehicle gap d [m], subject-vehicle
// speed v0 [m/s], lead-vehicle speed v1 [m/s]. d is bumper-to-bumper, so the
// collision condition is d <= collision_headway (0 by default).
struct State {
  double d = 0.0;
  double v0 = 0.0;
  double v1 = 0.0;

  bool operator==(const State&) const = default;
};

inline constexpr int kStateDims = 3;

inline double state_axis(const State& s, int i) {
  switch (i) {
    case 0: return s.d;
    case 1: return s.v0;
    default: return s.v1;
  }
}

inline void set_state_axis(State& s, int i, double x) {
  switch (i) {
    case 0: s.d = x; break;
    case 1: s.v0 = x; break;
    default: s.v1 = x; break;
  }
}

// Per-dimension covering half-widths (d, v0, v1 order).
using Delta = std::array<double, 3>;

// Axis-aligned box of admissible states; lower < upper componentwise.
struct StateBounds {
  State lower;
  State upper;

  bool operator==(const StateBounds&) const = default;

  void validate() const {
    for (int i = 0; i < kStateDims; ++i) {
      if (!(state_axis(lower, i) < state_axis(upper, i)))
        throw std::invalid_argument("StateBounds: lower must be < upper componentwise");
    }
  }

  double range(int i) const { return state_axis(upper, i) - state_axis(lower, i); }

  bool contains(const State& s) const {
    for (int i = 0; i < kStateDims; ++i) {
      double x = state_axis(s, i);
      if (x < state_axis(lower, i) || x > state_axis(upper, i)) return false;
    }
    return true;
  }

  State clip(const State& s) const {
    State out = s;
    for (int i = 0; i < kStateDims; ++i) {
      double x = std::clamp(state_axis(s, i), state_axis(lower, i), state_axis(upper, i));
      set_state_axis(out, i, x);
    }
    return out;
  }
};

}  // namespace safeset
