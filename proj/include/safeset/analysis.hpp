#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "safeset/covering_grid.hpp"
#include "safeset/quantifier.hpp"
#include "safeset/run_config.hpp"
#include "safeset/simulator.hpp"

namespace safeset {

namespace detail {

inline void check_same_geometry(const CoveringGrid& a, const CoveringGrid& b) {
  if (std::memcmp(&a.bounds().lower, &b.bounds().lower, sizeof(State)) != 0 ||
      std::memcmp(&a.bounds().upper, &b.bounds().upper, sizeof(State)) != 0 ||
      std::memcmp(a.delta().data(), b.delta().data(), 3 * sizeof(double)) != 0 ||
      a.lattice_dims() != b.lattice_dims())
    throw std::invalid_argument("grids disagree on bounds or delta");
}

inline CoveringGrid::CellId block_id(const CoveringGrid& g, const std::array<int, 3>& b) {
  auto dims = g.lattice_dims();
  return static_cast<CoveringGrid::CellId>((b[0] * dims[1] + b[1]) * dims[2] + b[2]);
}

// Lattice blocks the grid occupies: active lattice cells plus the blocks the
// live expansion centroids snap into.
inline std::set<CoveringGrid::CellId> occupied_blocks(const CoveringGrid& g) {
  std::set<CoveringGrid::CellId> blocks;
  for (auto id : g.active_ids()) {
    if (g.is_extra(id))
      blocks.insert(block_id(g, g.snap_to_lattice(g.centroid(id))));
    else
      blocks.insert(id);
  }
  return blocks;
}

inline std::string fmt_g(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace detail

// Intersection-over-union of the occupied lattice blocks across a batch of
// same-geometry grids.
inline double iou(const std::vector<const CoveringGrid*>& grids) {
  if (grids.empty()) throw std::invalid_argument("iou: empty batch");
  for (const auto* g : grids) detail::check_same_geometry(*grids.front(), *g);

  std::set<CoveringGrid::CellId> inter = detail::occupied_blocks(*grids.front());
  std::set<CoveringGrid::CellId> uni = inter;
  for (std::size_t i = 1; i < grids.size(); ++i) {
    auto blocks = detail::occupied_blocks(*grids[i]);
    std::set<CoveringGrid::CellId> next_inter;
    for (auto id : inter)
      if (blocks.count(id)) next_inter.insert(id);
    inter = std::move(next_inter);
    uni.insert(blocks.begin(), blocks.end());
  }
  if (uni.empty()) return 1.0;  // all sets empty, hence identical
  return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

// Occupied-block count and its fraction of the initial lattice.
inline std::pair<std::size_t, double> volume(const CoveringGrid& g) {
  std::size_t count = detail::occupied_blocks(g).size();
  return {count, static_cast<double>(count) / static_cast<double>(g.lattice_cell_count())};
}

// Boolean (v0, v1) occupancy plane at the lattice row containing d_value.
inline std::vector<std::vector<bool>> slice(const CoveringGrid& g, double d_value) {
  if (d_value < g.bounds().lower.d || d_value > g.bounds().upper.d)
    throw std::invalid_argument("slice: headway outside the grid bounds");
  auto dims = g.lattice_dims();
  int row = g.snap_to_lattice(State{d_value, g.bounds().lower.v0, g.bounds().lower.v1})[0];
  std::vector<std::vector<bool>> plane(
      static_cast<std::size_t>(dims[1]),
      std::vector<bool>(static_cast<std::size_t>(dims[2]), false));
  for (auto id : detail::occupied_blocks(g)) {
    int k = static_cast<int>(id) % dims[2];
    int j = (static_cast<int>(id) / dims[2]) % dims[1];
    int i = static_cast<int>(id) / (dims[1] * dims[2]);
    if (i == row) plane[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] = true;
  }
  return plane;
}

inline void write_slice_csv(std::ostream& os, const CoveringGrid& g, double d_value,
                            const std::string& meta) {
  auto plane = slice(g, d_value);
  auto dims = g.lattice_dims();
  os << "# " << meta << "\n";
  os << "v0\\v1";
  for (int k = 0; k < dims[2]; ++k)
    os << "," << detail::fmt_g(g.centroid(detail::block_id(g, {0, 0, k})).v1);
  os << "\n";
  for (int j = 0; j < dims[1]; ++j) {
    os << detail::fmt_g(g.centroid(detail::block_id(g, {0, j, 0})).v0);
    for (int k = 0; k < dims[2]; ++k)
      os << "," << (plane[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] ? 1 : 0);
    os << "\n";
  }
}

struct SummaryStats {
  std::size_t n = 0;
  double runs_mean = 0.0;
  double runs_std = 0.0;
  double collision_mean = 0.0;
  double collision_std = 0.0;
  double iou = 1.0;
};

inline SummaryStats summarize(const std::vector<SafeSetResult>& results) {
  if (results.empty()) throw std::invalid_argument("summarize: empty batch");
  SummaryStats s;
  s.n = results.size();
  auto stats = [&](auto pick, double& mean, double& dev) {
    double sum = 0.0;
    for (const auto& r : results) sum += static_cast<double>(pick(r));
    mean = sum / static_cast<double>(s.n);
    if (s.n > 1) {
      double ss = 0.0;
      for (const auto& r : results) {
        double d = static_cast<double>(pick(r)) - mean;
        ss += d * d;
      }
      dev = std::sqrt(ss / static_cast<double>(s.n - 1));
    }
  };
  stats([](const SafeSetResult& r) { return r.total_runs; }, s.runs_mean, s.runs_std);
  stats([](const SafeSetResult& r) { return r.collision_runs; }, s.collision_mean,
        s.collision_std);
  std::vector<const CoveringGrid*> grids;
  for (const auto& r : results) grids.push_back(&r.grid);
  s.iou = iou(grids);
  return s;
}

struct SummaryRow {
  std::string sv;
  std::string s0;
  double epsilon = 0.0;
  SummaryStats stats;
};

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows,
                              const std::string& meta) {
  os << "# " << meta << "\n";
  os << "SV,S_0,epsilon,scenario runs,collision runs,IoU\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%.1f +/- %.1f,%.1f +/- %.1f,%.3f",
                  r.sv.c_str(), r.s0.c_str(), detail::fmt_g(r.epsilon).c_str(),
                  r.stats.runs_mean, r.stats.runs_std, r.stats.collision_mean,
                  r.stats.collision_std, r.stats.iou);
    os << buf << "\n";
  }
}

// ---------------------------------------------------------------------------
// Concrete-scenario battery (car-to-car rear categories).

enum class NcapKind { kCcrs, kCcrm, kCcrb };

inline const char* to_string(NcapKind k) {
  switch (k) {
    case NcapKind::kCcrs: return "CCRs";
    case NcapKind::kCcrm: return "CCRm";
    case NcapKind::kCcrb: return "CCRb";
  }
  return "?";
}

struct NcapScenario {
  NcapKind kind = NcapKind::kCcrs;
  double v0 = 0.0;
  double v1 = 0.0;
  double headway = 0.0;
  double lead_decel = 0.0;  // CCRb only, negative

  LeadPolicy lead() const {
    switch (kind) {
      case NcapKind::kCcrs: return LeadPolicy::stationary();
      case NcapKind::kCcrm: return LeadPolicy::constant_speed();
      case NcapKind::kCcrb: return LeadPolicy::constant_decel(lead_decel);
    }
    return LeadPolicy::stationary();
  }

  void validate() const {
    if (!(headway > 0.0))
      throw std::invalid_argument("NcapScenario: headway must be > 0");
    if (v0 < 0.0 || v1 < 0.0)
      throw std::invalid_argument("NcapScenario: speeds must be >= 0");
    switch (kind) {
      case NcapKind::kCcrs:
        if (v1 != 0.0)
          throw std::invalid_argument("NcapScenario: CCRs requires a stationary lead");
        break;
      case NcapKind::kCcrm:
        if (!(v1 > 0.0))
          throw std::invalid_argument("NcapScenario: CCRm requires a moving lead");
        break;
      case NcapKind::kCcrb:
        if (!(v1 > 0.0))
          throw std::invalid_argument("NcapScenario: CCRb requires a moving lead");
        if (!(lead_decel < 0.0))
          throw std::invalid_argument("NcapScenario: CCRb requires a braking lead");
        break;
    }
  }
};

struct NcapOutcome {
  std::size_t scenario = 0;
  int repeat = 0;
  bool passed = false;
  std::size_t steps = 0;  // recorded trajectory length
};

// Runs every scenario `repeats` times; pass = horizon reached without
// collision. Outcomes are ordered by scenario index, then repeat.
inline std::vector<NcapOutcome> ncap_battery(SubjectVehicleModel& model,
                                             const std::vector<NcapScenario>& scenarios,
                                             int repeats, const SimConfig& sim,
                                             std::uint64_t seed) {
  if (repeats < 1) throw std::invalid_argument("ncap_battery: repeats must be >= 1");
  sim.validate();
  for (const auto& s : scenarios) s.validate();

  Rng rng(seed);
  std::vector<NcapOutcome> outcomes;
  outcomes.reserve(scenarios.size() * static_cast<std::size_t>(repeats));
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto& sc = scenarios[i];
    for (int rep = 0; rep < repeats; ++rep) {
      Trajectory traj =
          run_scenario(model, sc.lead(), State{sc.headway, sc.v0, sc.v1}, sim, rng);
      outcomes.push_back(NcapOutcome{i, rep, !traj.collided(), traj.states.size()});
    }
  }
  return outcomes;
}

inline void write_battery_csv(std::ostream& os, const std::vector<NcapScenario>& scenarios,
                              const std::vector<NcapOutcome>& outcomes,
                              const std::string& meta) {
  os << "# " << meta << "\n";
  os << "scenario,kind,v0,v1,headway,repeat,outcome\n";
  for (const auto& o : outcomes) {
    const auto& s = scenarios.at(o.scenario);
    os << o.scenario << "," << to_string(s.kind) << "," << detail::fmt_g(s.v0) << ","
       << detail::fmt_g(s.v1) << "," << detail::fmt_g(s.headway) << "," << o.repeat << ","
       << (o.passed ? "pass" : "collision") << "\n";
  }
}

struct NcapConfig {
  nlohmann::ordered_json model_spec;
  SimConfig sim;
  int repeats = 1;
  std::uint64_t seed = 0;
  std::vector<NcapScenario> scenarios;
  nlohmann::ordered_json echo;
};

inline NcapConfig parse_ncap_config(const std::string& text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("battery config parse error: ") + e.what());
  }
  try {
    if (!doc.is_object())
      throw std::runtime_error("battery config: top level must be an object");
    detail::require_keys(doc, {"model", "scenarios"}, {"repeats", "sim", "seed"},
                         "battery config");
    NcapConfig cfg;
    cfg.echo = doc;
    cfg.model_spec = doc.at("model");
    make_model(cfg.model_spec, 0);  // validate eagerly

    if (doc.contains("sim")) {
      const auto& sj = doc["sim"];
      detail::require_keys(sj, {}, {"dt", "steps", "collision_headway"}, "sim");
      cfg.sim.dt = detail::num_or(sj, "dt", cfg.sim.dt);
      if (sj.contains("steps")) cfg.sim.K = sj.at("steps").get<int>();
      cfg.sim.collision_headway =
          detail::num_or(sj, "collision_headway", cfg.sim.collision_headway);
    }
    if (doc.contains("repeats")) cfg.repeats = doc["repeats"].get<int>();
    if (cfg.repeats < 1) throw std::runtime_error("battery config: repeats must be >= 1");
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();

    if (!doc["scenarios"].is_array() || doc["scenarios"].empty())
      throw std::runtime_error("battery config: scenarios must be a non-empty array");
    for (const auto& sj : doc["scenarios"]) {
      std::string kind = sj.at("kind").get<std::string>();
      NcapScenario s;
      if (kind == "CCRs") {
        s.kind = NcapKind::kCcrs;
        detail::require_keys(sj, {"kind", "v0", "v1", "headway"}, {}, "scenario");
      } else if (kind == "CCRm") {
        s.kind = NcapKind::kCcrm;
        detail::require_keys(sj, {"kind", "v0", "v1", "headway"}, {}, "scenario");
      } else if (kind == "CCRb") {
        s.kind = NcapKind::kCcrb;
        detail::require_keys(sj, {"kind", "v0", "v1", "headway", "lead_decel"}, {},
                             "scenario");
        s.lead_decel = sj.at("lead_decel").get<double>();
      } else {
        throw std::runtime_error("battery config: unknown scenario kind '" + kind + "'");
      }
      s.v0 = sj.at("v0").get<double>();
      s.v1 = sj.at("v1").get<double>();
      s.headway = sj.at("headway").get<double>();
      s.validate();
      cfg.scenarios.push_back(s);
    }
    cfg.sim.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("battery config: malformed content: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("battery config: ") + e.what());
  }
}

}  // namespace safeset
