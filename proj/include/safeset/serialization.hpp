#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "safeset/covering_grid.hpp"
#include "safeset/quantifier.hpp"
#include "safeset/version.hpp"

namespace safeset {

inline constexpr std::string_view kDumpFormat = "safeset-dump";
inline constexpr int kDumpFormatVersion = 1;

namespace detail {

inline nlohmann::ordered_json state_to_json(const State& s) {
  return nlohmann::ordered_json::array({s.d, s.v0, s.v1});
}

inline State state_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3)
    throw std::runtime_error(std::string(what) + ": expected a 3-element array");
  for (const auto& x : j)
    if (!x.is_number())
      throw std::runtime_error(std::string(what) + ": expected numeric entries");
  return State{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

// Bitwise key for exact centroid matching.
inline std::string state_key(const State& s) {
  std::string key(3 * sizeof(double), '\0');
  std::memcpy(key.data(), &s.d, sizeof(double));
  std::memcpy(key.data() + sizeof(double), &s.v0, sizeof(double));
  std::memcpy(key.data() + 2 * sizeof(double), &s.v1, sizeof(double));
  return key;
}

inline void require_keys(const nlohmann::json& doc,
                         const std::vector<std::string>& required,
                         const std::vector<std::string>& optional,
                         const char* what) {
  for (const auto& k : required)
    if (!doc.contains(k))
      throw std::runtime_error(std::string(what) + ": missing field '" + k + "'");
  for (const auto& [k, v] : doc.items()) {
    bool known = false;
    for (const auto& r : required) known = known || k == r;
    for (const auto& o : optional) known = known || k == o;
    if (!known)
      throw std::runtime_error(std::string(what) + ": unknown field '" + k + "'");
  }
}

}  // namespace detail

inline nlohmann::ordered_json policy_to_json(const LeadPolicy& p) {
  nlohmann::ordered_json j;
  switch (p.kind) {
    case LeadPolicy::Kind::kConstantDecel:
      j["kind"] = "constant_decel";
      j["accel"] = p.a_brake;
      break;
    case LeadPolicy::Kind::kConstantSpeed:
      j["kind"] = "constant_speed";
      break;
    case LeadPolicy::Kind::kStationary:
      j["kind"] = "stationary";
      break;
    case LeadPolicy::Kind::kPiecewise: {
      j["kind"] = "piecewise";
      auto segs = nlohmann::ordered_json::array();
      for (const auto& [dur, a] : p.profile)
        segs.push_back({{"duration", dur}, {"accel", a}});
      j["segments"] = std::move(segs);
      break;
    }
  }
  return j;
}

inline nlohmann::ordered_json quant_config_to_json(const QuantConfig& cfg) {
  nlohmann::ordered_json j;
  j["epsilon"] = cfg.epsilon;
  j["beta"] = cfg.beta;
  j["bounds"] = {{"lower", detail::state_to_json(cfg.bounds.lower)},
                 {"upper", detail::state_to_json(cfg.bounds.upper)}};
  j["delta"] = nlohmann::ordered_json::array({cfg.delta[0], cfg.delta[1], cfg.delta[2]});
  j["sim"] = {{"dt", cfg.sim.dt},
              {"steps", cfg.sim.K},
              {"collision_headway", cfg.sim.collision_headway}};
  j["policy"] = policy_to_json(cfg.policy);
  j["seed"] = cfg.seed;
  j["max_total_runs"] = cfg.max_total_runs;
  j["cascade_edges"] = cfg.cascade_edges;
  j["normalized_nearest"] = cfg.normalized_nearest;
  return j;
}

// Serializes the active covering set: bounds, delta, active centroids in cell
// id order (lattice first, then expansion centroids in insertion order), the
// removed lattice-cell count, the seed and a configuration echo. Pruned
// expansion centroids are not recorded: the dump captures the covering set,
// not its construction history.
inline std::string dump_grid(const CoveringGrid& g, std::uint64_t seed,
                             const nlohmann::ordered_json& config_echo,
                             const SafeSetResult* result = nullptr) {
  nlohmann::ordered_json doc;
  doc["format"] = kDumpFormat;
  doc["format_version"] = kDumpFormatVersion;
  doc["tool_version"] = kToolVersion;
  doc["bounds"] = {{"lower", detail::state_to_json(g.bounds().lower)},
                   {"upper", detail::state_to_json(g.bounds().upper)}};
  doc["delta"] =
      nlohmann::ordered_json::array({g.delta()[0], g.delta()[1], g.delta()[2]});
  auto centroids = nlohmann::ordered_json::array();
  for (auto id : g.active_ids())
    centroids.push_back(detail::state_to_json(g.centroid(id)));
  doc["active_centroids"] = std::move(centroids);
  doc["removed_cell_count"] = g.removed_lattice_count();
  doc["seed"] = seed;
  doc["config_echo"] = config_echo;
  if (result) {
    doc["result"] = {{"total_runs", result->total_runs},
                     {"collision_runs", result->collision_runs},
                     {"consecutive_safe_at_exit", result->consecutive_safe_at_exit},
                     {"exit_reason", to_string(result->exit_reason)}};
  }
  return doc.dump(2) + "\n";
}

inline std::string dump_result(const SafeSetResult& res) {
  return dump_grid(res.grid, res.seed, quant_config_to_json(res.config), &res);
}

struct LoadedDump {
  CoveringGrid grid;
  std::uint64_t seed = 0;
  nlohmann::ordered_json config_echo;

  struct Counters {
    std::uint64_t total_runs = 0;
    std::uint64_t collision_runs = 0;
    std::uint64_t consecutive_safe_at_exit = 0;
    std::string exit_reason;
  };
  std::optional<Counters> result;
};

inline LoadedDump load_dump(const std::string& text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("dump parse error: ") + e.what());
  }
  // Shape errors below surface as std::runtime_error; nlohmann's own
  // exceptions (wrong types, missing subkeys) are converted at the end.
  try {
  if (!doc.is_object()) throw std::runtime_error("dump: top level must be an object");
  detail::require_keys(doc,
                       {"format", "format_version", "tool_version", "bounds", "delta",
                        "active_centroids", "removed_cell_count", "seed", "config_echo"},
                       {"result"}, "dump");
  if (doc["format"].get<std::string>() != kDumpFormat)
    throw std::runtime_error("dump: unrecognized format tag");
  if (doc["format_version"] != kDumpFormatVersion)
    throw std::runtime_error("dump: unsupported format version");

  StateBounds bounds{detail::state_from_json(doc["bounds"].at("lower"), "bounds.lower"),
                     detail::state_from_json(doc["bounds"].at("upper"), "bounds.upper")};
  const auto& dj = doc["delta"];
  if (!dj.is_array() || dj.size() != 3)
    throw std::runtime_error("dump: delta must be a 3-element array");
  Delta delta{dj[0].get<double>(), dj[1].get<double>(), dj[2].get<double>()};

  LoadedDump out{[&] {
    try {
      return CoveringGrid(bounds, delta);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(std::string("dump: ") + e.what());
    }
  }()};

  // Exact bitwise matching of dumped centroids against the fresh lattice.
  std::unordered_map<std::string, CoveringGrid::CellId> lattice_by_bits;
  for (CoveringGrid::CellId id = 0;
       id < static_cast<CoveringGrid::CellId>(out.grid.lattice_cell_count()); ++id)
    lattice_by_bits.emplace(detail::state_key(out.grid.centroid(id)), id);

  std::vector<bool> keep(out.grid.lattice_cell_count(), false);
  std::vector<State> extras;
  for (const auto& cj : doc["active_centroids"]) {
    State s = detail::state_from_json(cj, "active_centroids entry");
    auto hit = lattice_by_bits.find(detail::state_key(s));
    if (hit != lattice_by_bits.end())
      keep[hit->second] = true;
    else
      extras.push_back(s);
  }
  for (CoveringGrid::CellId id = 0;
       id < static_cast<CoveringGrid::CellId>(keep.size()); ++id)
    if (!keep[id]) out.grid.remove(id);
  for (const State& s : extras) {
    try {
      out.grid.add_centroid(s);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(std::string("dump: ") + e.what());
    }
  }

  if (out.grid.removed_lattice_count() !=
      doc["removed_cell_count"].get<std::size_t>())
    throw std::runtime_error("dump: removed_cell_count disagrees with centroid list");

  out.seed = doc["seed"].get<std::uint64_t>();
  out.config_echo = doc["config_echo"];
  if (doc.contains("result")) {
    const auto& rj = doc["result"];
    detail::require_keys(
        rj, {"total_runs", "collision_runs", "consecutive_safe_at_exit", "exit_reason"},
        {}, "dump result");
    LoadedDump::Counters c;
    c.total_runs = rj["total_runs"].get<std::uint64_t>();
    c.collision_runs = rj["collision_runs"].get<std::uint64_t>();
    c.consecutive_safe_at_exit = rj["consecutive_safe_at_exit"].get<std::uint64_t>();
    c.exit_reason = rj["exit_reason"].get<std::string>();
    out.result = std::move(c);
  }
  return out;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("dump: malformed content: ") + e.what());
  }
}

// Equality of the represented covering set: identical geometry, identical
// lattice statuses, identical multiset of live expansion centroids (bitwise).
// Cheaper and stricter than geometric set equality; insensitive to pruned
// extras and to extra insertion ids.
inline bool active_set_equal(const CoveringGrid& a, const CoveringGrid& b) {
  if (std::memcmp(&a.bounds().lower, &b.bounds().lower, sizeof(State)) != 0) return false;
  if (std::memcmp(&a.bounds().upper, &b.bounds().upper, sizeof(State)) != 0) return false;
  if (std::memcmp(a.delta().data(), b.delta().data(), 3 * sizeof(double)) != 0)
    return false;
  if (a.lattice_dims() != b.lattice_dims()) return false;
  for (CoveringGrid::CellId id = 0;
       id < static_cast<CoveringGrid::CellId>(a.lattice_cell_count()); ++id)
    if (a.is_active(id) != b.is_active(id)) return false;

  auto live_extras = [](const CoveringGrid& g) {
    std::vector<std::string> keys;
    for (auto id : g.active_ids())
      if (g.is_extra(id)) keys.push_back(detail::state_key(g.centroid(id)));
    std::sort(keys.begin(), keys.end());
    return keys;
  };
  return live_extras(a) == live_extras(b);
}

// Write-then-rename so readers never observe a torn file.
inline void write_file_atomic(const std::filesystem::path& path,
                              std::string_view content) {
  namespace fs = std::filesystem;
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("rename failed for: " + path.string());
  }
}

}  // namespace safeset
