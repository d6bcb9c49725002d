#pragma once

#include <algorithm>
#include <cstdio>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "safeset/lead_policy.hpp"
#include "safeset/model.hpp"
#include "safeset/rng.hpp"
#include "safeset/state.hpp"

namespace safeset {

struct SimConfig {
  double dt = 0.1;
  int K = 300;  // max steps per run
  StateBounds bounds{State{0.0, 0.0, 0.0}, State{100.0, 30.0, 30.0}};
  double collision_headway = 0.0;  // failure when d <= this

  void validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("SimConfig: dt must be > 0");
    if (K < 2) throw std::invalid_argument("SimConfig: K must be >= 2");
    bounds.validate();
  }
};

enum class TerminatedBy { kCollision, kHorizon };

struct Trajectory {
  std::vector<State> states;   // states[0] = s0; length in [2, K+1]
  std::vector<double> a_sv;    // command applied at states[i]; size states-1
  std::vector<double> a_pov;
  TerminatedBy terminated_by = TerminatedBy::kHorizon;
  bool clipped = false;  // headway hit d_max at least once

  bool collided() const { return terminated_by == TerminatedBy::kCollision; }
};

// Explicit Euler on speeds with trapezoidal displacement. Speeds clamp to
// [0, v_max] per vehicle. Headway clamps above at d_max (*clipped_out is set
// to true when that engages, never cleared) and is NOT clamped below: d' <= 0
// signals collision to the caller.
inline State step_dynamics(const State& s, double a_sv, double a_pov,
                           const SimConfig& cfg, bool* clipped_out = nullptr) {
  const double v0n = std::clamp(s.v0 + a_sv * cfg.dt, 0.0, cfg.bounds.upper.v0);
  const double v1n = std::clamp(s.v1 + a_pov * cfg.dt, 0.0, cfg.bounds.upper.v1);
  double d = s.d + ((s.v1 + v1n) / 2.0 - (s.v0 + v0n) / 2.0) * cfg.dt;
  if (d > cfg.bounds.upper.d) {
    d = cfg.bounds.upper.d;
    if (clipped_out) *clipped_out = true;
  }
  return State{d, v0n, v1n};
}

// Optional per-step SV acceleration perturbation (added to the model command).
using Disturbance = std::function<double(const State&, int step, Rng&)>;

// One run of the scenario from s0: resets the model, then steps until
// collision (d <= collision_headway; final state recorded with d clamped to
// exactly collision_headway) or the K-step horizon.
inline Trajectory run_scenario(SubjectVehicleModel& model, const LeadPolicy& policy,
                               const State& s0, const SimConfig& cfg, Rng& rng,
                               const Disturbance& omega = {}) {
  cfg.validate();
  if (s0.d <= cfg.collision_headway)
    throw std::invalid_argument("run_scenario: initial state is already a collision");
  model.reset();
  Trajectory traj;
  traj.states.reserve(static_cast<std::size_t>(cfg.K) + 1);
  traj.states.push_back(s0);
  State s = s0;
  for (int k = 0; k < cfg.K; ++k) {
    double a_sv = model.accel(s, cfg.dt);
    if (omega) a_sv += omega(s, k, rng);
    const double a_pov = policy.accel(s, k * cfg.dt, cfg.dt);
    State next = step_dynamics(s, a_sv, a_pov, cfg, &traj.clipped);
    traj.a_sv.push_back(a_sv);
    traj.a_pov.push_back(a_pov);
    if (next.d <= cfg.collision_headway) {
      next.d = cfg.collision_headway;
      traj.states.push_back(next);
      traj.terminated_by = TerminatedBy::kCollision;
      return traj;
    }
    traj.states.push_back(next);
    s = next;
  }
  traj.terminated_by = TerminatedBy::kHorizon;
  return traj;
}

// One row per recorded state: the state plus the commands applied at it. The
// terminal row repeats the last commands (the ones in effect when the run
// ended). Optional metadata line goes above the header.
inline void write_trace_csv(std::ostream& out, const Trajectory& traj, double dt,
                            const std::string& meta = {}) {
  if (!meta.empty()) out << meta << "\n";
  out << "t,d,v0,v1,a_sv,a_pov\n";
  char buf[256];
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const std::size_t j = std::min(i, traj.a_sv.size() - 1);
    const State& s = traj.states[i];
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                  static_cast<double>(i) * dt, s.d, s.v0, s.v1, traj.a_sv[j],
                  traj.a_pov[j]);
    out << buf;
  }
}

}  // namespace safeset
