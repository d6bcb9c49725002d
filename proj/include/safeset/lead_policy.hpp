#pragma once

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "safeset/state.hpp"

namespace safeset {

// Lead-vehicle (POV) testing policy: commanded lead acceleration from
// (state, elapsed time). The simulator clamps lead speed to [0, v_max], so
// braking policies hold standstill and the lead never reverses.
struct LeadPolicy {
  enum class Kind { kConstantDecel, kConstantSpeed, kStationary, kPiecewise };

  Kind kind = Kind::kConstantSpeed;
  double a_brake = 0.0;                            // constant_decel only
  std::vector<std::pair<double, double>> profile;  // (duration s, accel m/s^2)

  static LeadPolicy constant_decel(double a) {
    LeadPolicy p;
    p.kind = Kind::kConstantDecel;
    p.a_brake = a;
    return p;
  }
  static LeadPolicy constant_speed() { return LeadPolicy{}; }
  static LeadPolicy stationary() {
    LeadPolicy p;
    p.kind = Kind::kStationary;
    return p;
  }
  static LeadPolicy piecewise(std::vector<std::pair<double, double>> segments) {
    LeadPolicy p;
    p.kind = Kind::kPiecewise;
    p.profile = std::move(segments);
    return p;
  }

  double accel(const State& s, double t, double dt) const {
    switch (kind) {
      case Kind::kConstantDecel:
        return a_brake;
      case Kind::kConstantSpeed:
        return 0.0;
      case Kind::kStationary:
        // Overshoot the exact cancel so the speed clamp pins v1 at 0.0
        // bitwise; commanded magnitude is a testing-policy artifact.
        return -2.0 * s.v1 / dt;
      case Kind::kPiecewise: {
        double cum = 0.0;
        for (const auto& [dur, a] : profile) {
          if (t < cum + dur) return a;
          cum += dur;
        }
        return 0.0;  // coast after the profile ends
      }
    }
    return 0.0;
  }

  std::string describe() const {
    char buf[64];
    switch (kind) {
      case Kind::kConstantDecel:
        std::snprintf(buf, sizeof buf, "constant_decel(%g)", a_brake);
        return buf;
      case Kind::kConstantSpeed:
        return "constant_speed";
      case Kind::kStationary:
        return "stationary";
      case Kind::kPiecewise: {
        std::string out = "piecewise[";
        for (std::size_t i = 0; i < profile.size(); ++i) {
          std::snprintf(buf, sizeof buf, "%s(%g,%g)", i ? "," : "",
                        profile[i].first, profile[i].second);
          out += buf;
        }
        return out + "]";
      }
    }
    return "?";
  }
};

}  // namespace safeset
