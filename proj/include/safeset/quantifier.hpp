#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "safeset/covering_grid.hpp"
#include "safeset/replay_buffer.hpp"
#include "safeset/rng.hpp"
#include "safeset/simulator.hpp"
#include "safeset/transition_graph.hpp"

namespace safeset {

// Consecutive collision-free i.i.d. runs needed to certify escape probability
// <= epsilon at confidence >= 1-beta: ceil(ln beta / ln(1-epsilon)), floored
// at one run.
inline std::uint64_t required_consecutive_runs(double epsilon, double beta) {
  if (!(epsilon > 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("required_consecutive_runs: epsilon must be in (0,1]");
  if (!(beta > 0.0 && beta <= 1.0))
    throw std::invalid_argument("required_consecutive_runs: beta must be in (0,1]");
  if (epsilon == 1.0) return 1;
  const double n = std::ceil(std::log(beta) / std::log1p(-epsilon));
  return n >= 1.0 ? static_cast<std::uint64_t>(n) : 1;
}

struct QuantConfig {
  double epsilon = 0.01;
  double beta = 0.001;
  Delta delta{10.0, 6.0, 6.0};
  StateBounds bounds{State{0.0, 0.0, 0.0}, State{100.0, 30.0, 30.0}};
  SimConfig sim;
  LeadPolicy policy;
  std::uint64_t seed = 0;
  std::uint64_t max_total_runs = 0;  // 0 -> 50x the required consecutive runs
  // Edges between already-covered consecutive cells of safe runs make pruning
  // cascade upstream through the initially-full lattice; that over-prunes
  // provably safe interior cells for monotone braking dynamics, so only
  // expansion edges are recorded by default.
  bool cascade_edges = false;
  bool normalized_nearest = false;

  std::uint64_t effective_run_cap() const {
    return max_total_runs ? max_total_runs
                          : 50 * required_consecutive_runs(epsilon, beta);
  }

  void validate() const {
    const std::uint64_t needed = required_consecutive_runs(epsilon, beta);
    bounds.validate();
    sim.validate();
    for (double x : delta)
      if (!(x > 0.0)) throw std::invalid_argument("QuantConfig: delta must be > 0");
    if (max_total_runs != 0 && max_total_runs <= needed)
      throw std::invalid_argument(
          "QuantConfig: max_total_runs must exceed the required consecutive runs");
  }
};

enum class ExitReason { kValidated, kExhaustedEmpty, kRunCap };

inline const char* to_string(ExitReason r) {
  switch (r) {
    case ExitReason::kValidated: return "validated";
    case ExitReason::kExhaustedEmpty: return "exhausted_empty";
    case ExitReason::kRunCap: return "run_cap";
  }
  return "?";
}

struct RunLogRow {
  std::uint64_t index = 0;
  State s0{};
  bool collision = false;
  std::size_t traj_len = 0;
  std::size_t active_after = 0;
  std::size_t buffer_after = 0;
  std::uint64_t n_after = 0;
};

struct SafeSetResult {
  explicit SafeSetResult(CoveringGrid g) : grid(std::move(g)) {}

  CoveringGrid grid;
  std::uint64_t total_runs = 0;
  std::uint64_t collision_runs = 0;
  std::uint64_t consecutive_safe_at_exit = 0;
  ExitReason exit_reason = ExitReason::kRunCap;
  std::uint64_t seed = 0;
  std::size_t initial_active_count = 0;
  QuantConfig config;
  TransitionGraph exploration_graph;  // safe-run edges feeding ancestor pruning
  TransitionGraph unsafe_graph;       // transitions observed inside colliding runs
  std::vector<RunLogRow> run_log;
};

// Initial cover of the bounds, minus cells whose clipped neighborhood
// interior dips into the collision set.
inline CoveringGrid make_initial_grid(const QuantConfig& cfg) {
  CoveringGrid grid(cfg.bounds, cfg.delta);
  grid.set_nearest_normalized(cfg.normalized_nearest);
  std::vector<CoveringGrid::CellId> excluded;
  for (auto id : grid.active_ids()) {
    const double lo = std::max(cfg.bounds.lower.d, grid.centroid(id).d - cfg.delta[0]);
    if (lo < cfg.sim.collision_headway) excluded.push_back(id);
  }
  for (auto id : excluded) grid.remove(id);
  return grid;
}

// Observes each executed scenario run (0-based run index, full trajectory);
// used for optional trace capture.
using RunObserver = std::function<void(std::uint64_t, const Trajectory&)>;

// Guided quantification loop: sample a start centroid (uniform, or steered by
// the replay buffer of unsafe states), run the scenario, then either prune
// (collision) or expand coverage (safe) until the consecutive-safe-run target
// certifies the surviving set.
inline SafeSetResult quantify(const QuantConfig& cfg, SubjectVehicleModel& model,
                              const CoveringGrid* warm_start = nullptr,
                              const RunObserver& observer = {}) {
  cfg.validate();
  if (warm_start &&
      (!(warm_start->bounds() == cfg.bounds) || warm_start->delta() != cfg.delta))
    throw std::invalid_argument("quantify: warm-start grid geometry mismatch");
  SafeSetResult res(warm_start ? *warm_start : make_initial_grid(cfg));
  res.config = cfg;
  res.seed = cfg.seed;
  CoveringGrid& grid = res.grid;
  grid.set_nearest_normalized(cfg.normalized_nearest);
  res.initial_active_count = grid.active_count();

  ReplayBuffer buffer;
  Rng rng(cfg.seed);
  const std::uint64_t needed = required_consecutive_runs(cfg.epsilon, cfg.beta);
  const std::uint64_t cap = cfg.effective_run_cap();
  std::uint64_t n_consec = 0;

  while (true) {
    if (n_consec >= needed) {
      res.exit_reason = ExitReason::kValidated;
      break;
    }
    if (res.total_runs >= cap) {
      res.exit_reason = ExitReason::kRunCap;
      break;
    }
    std::optional<CoveringGrid::CellId> start;
    if (buffer.empty()) {
      start = grid.sample_centroid(rng);
    } else {
      start = grid.nearest_centroid(buffer.pop());
    }
    if (!start) {
      res.exit_reason = ExitReason::kExhaustedEmpty;
      break;
    }
    const State s0 = grid.centroid(*start);
    Trajectory traj = run_scenario(model, cfg.policy, s0, cfg.sim, rng);
    if (observer) observer(res.total_runs, traj);
    ++res.total_runs;

    if (traj.collided()) {
      ++res.collision_runs;
      std::optional<CoveringGrid::CellId> prev;
      for (const State& s : traj.states) {
        const auto cell = grid.cell_of(s);
        buffer.push(s);
        if (cell) {
          for (auto anc : res.exploration_graph.ancestors(*cell)) grid.remove(anc);
          if (prev && *prev != *cell) res.unsafe_graph.add_edge(*prev, *cell);
          prev = cell;
        }
      }
      n_consec = 0;
    } else {
      const std::size_t active_before = grid.active_count();
      std::optional<CoveringGrid::CellId> prev = grid.cell_of(traj.states.front());
      for (std::size_t k = 1; k < traj.states.size(); ++k) {
        const State& s = traj.states[k];
        const auto cell = grid.cell_of(s);
        if (!cell) {
          if (cfg.bounds.contains(s)) {
            const auto fresh = grid.add_centroid(s);
            if (prev) res.exploration_graph.add_edge(*prev, fresh);
            prev = fresh;
          } else {
            prev.reset();  // outside the represented space: break the chain
          }
        } else {
          if (prev && *cell != *prev && cfg.cascade_edges)
            res.exploration_graph.add_edge(*prev, *cell);
          prev = cell;
        }
      }
      if (grid.active_count() != active_before || !buffer.empty())
        n_consec = 0;
      else
        ++n_consec;
    }
    res.run_log.push_back(RunLogRow{res.total_runs - 1, s0, traj.collided(),
                                    traj.states.size(), grid.active_count(),
                                    buffer.size(), n_consec});
  }
  res.consecutive_safe_at_exit = n_consec;
  return res;
}

enum class ViolationCause { kCollision, kLeftSet, kStructuralOverlap };

inline const char* to_string(ViolationCause c) {
  switch (c) {
    case ViolationCause::kCollision: return "collision";
    case ViolationCause::kLeftSet: return "left_set";
    case ViolationCause::kStructuralOverlap: return "structural_overlap";
  }
  return "?";
}

struct Violation {
  std::uint64_t run_index = 0;
  std::size_t step_index = 0;
  State state{};
  ViolationCause cause = ViolationCause::kCollision;
};

struct ValidationReport {
  bool passed = false;
  std::uint64_t runs_executed = 0;
  std::uint64_t required_runs = 0;
  std::optional<Violation> first_violation;
};

// Theorem-style certification: N i.i.d. uniform-centroid runs must all stay
// inside the union of active neighborhoods without colliding.
inline ValidationReport validate(const CoveringGrid& grid, SubjectVehicleModel& model,
                                 const LeadPolicy& policy, double epsilon, double beta,
                                 const SimConfig& sim, Rng& rng) {
  sim.validate();
  if (grid.active_count() == 0)
    throw std::invalid_argument("validate: grid has no active cells");
  ValidationReport rep;
  rep.required_runs = required_consecutive_runs(epsilon, beta);

  // Structural pre-check: no active neighborhood interior may dip into the
  // collision set.
  for (auto id : grid.active_ids()) {
    const double lo = std::max(grid.bounds().lower.d, grid.centroid(id).d - grid.delta()[0]);
    if (lo < sim.collision_headway) {
      rep.first_violation =
          Violation{0, 0, grid.centroid(id), ViolationCause::kStructuralOverlap};
      return rep;
    }
  }

  for (std::uint64_t i = 0; i < rep.required_runs; ++i) {
    const auto cell = grid.sample_centroid(rng);
    const Trajectory traj = run_scenario(model, policy, grid.centroid(*cell), sim, rng);
    ++rep.runs_executed;
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
      const bool final_collision = traj.collided() && k + 1 == traj.states.size();
      if (final_collision) {
        rep.first_violation = Violation{i, k, traj.states[k], ViolationCause::kCollision};
        return rep;
      }
      if (!grid.cell_of(traj.states[k])) {
        rep.first_violation = Violation{i, k, traj.states[k], ViolationCause::kLeftSet};
        return rep;
      }
    }
  }
  rep.passed = true;
  return rep;
}

// Run log export: run index, start state, outcome, and the counters that
// drive the exit decision.
inline void write_run_log_csv(std::ostream& out, const SafeSetResult& res,
                              const std::string& meta = {}) {
  if (!meta.empty()) out << meta << "\n";
  out << "run,d0,v0_0,v1_0,outcome,traj_len,active_after,buffer_after,consecutive_safe\n";
  char buf[256];
  for (const auto& r : res.run_log) {
    std::snprintf(buf, sizeof buf, "%llu,%.12g,%.12g,%.12g,%s,%zu,%zu,%zu,%llu\n",
                  static_cast<unsigned long long>(r.index), r.s0.d, r.s0.v0, r.s0.v1,
                  r.collision ? "collision" : "safe", r.traj_len, r.active_after,
                  r.buffer_after, static_cast<unsigned long long>(r.n_after));
    out << buf;
  }
}

}  // namespace safeset
