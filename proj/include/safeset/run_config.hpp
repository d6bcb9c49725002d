#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "safeset/quantifier.hpp"
#include "safeset/serialization.hpp"
#include "safeset/vehicle_models.hpp"

namespace safeset {

namespace detail {

// Deterministic per-run seed derivation (splitmix64 finalizer) for stochastic
// model internals when the config does not pin one explicitly.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline double num_or(const nlohmann::json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

inline bool flag_or(const nlohmann::json& j, const char* key, bool fallback) {
  return j.contains(key) ? j.at(key).get<bool>() : fallback;
}

}  // namespace detail

inline LeadPolicy policy_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw std::runtime_error("policy: expected an object with a 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant_decel") {
    detail::require_keys(j, {"kind", "accel"}, {}, "policy");
    return LeadPolicy::constant_decel(j.at("accel").get<double>());
  }
  if (kind == "constant_speed") {
    detail::require_keys(j, {"kind"}, {}, "policy");
    return LeadPolicy::constant_speed();
  }
  if (kind == "stationary") {
    detail::require_keys(j, {"kind"}, {}, "policy");
    return LeadPolicy::stationary();
  }
  if (kind == "piecewise") {
    detail::require_keys(j, {"kind", "segments"}, {}, "policy");
    std::vector<std::pair<double, double>> segs;
    for (const auto& sj : j.at("segments")) {
      detail::require_keys(sj, {"duration", "accel"}, {}, "policy segment");
      segs.emplace_back(sj.at("duration").get<double>(), sj.at("accel").get<double>());
    }
    return LeadPolicy::piecewise(std::move(segs));
  }
  throw std::runtime_error("policy: unknown kind '" + kind + "'");
}

// Builds a fresh model instance from its config spec. run_seed feeds the
// internal randomness of stochastic wrappers (unless the spec pins a seed),
// so distinct quantification seeds get distinct disturbance streams while
// identical invocations stay bitwise reproducible.
inline std::unique_ptr<SubjectVehicleModel> make_model(const nlohmann::json& spec,
                                                       std::uint64_t run_seed) {
  if (!spec.is_object() || !spec.contains("name"))
    throw std::runtime_error("model: expected an object with a 'name'");
  detail::require_keys(spec, {"name"}, {"params"}, "model");
  const std::string name = spec.at("name").get<std::string>();
  const nlohmann::json params =
      spec.contains("params") ? spec.at("params") : nlohmann::json::object();
  if (!params.is_object()) throw std::runtime_error("model params: expected an object");

  try {
    if (name == "idm_m" || name == "idm_n" || name == "idm_h") {
      detail::require_keys(params,
                           {},
                           {"s0_min_gap", "a_max", "b_comf", "T_headway", "exponent",
                            "vehicle_length", "v_free", "b_cap",
                            "subtract_vehicle_length", "gap_floor"},
                           "model params");
      IdmParams p;
      p.b_cap = name == "idm_m" ? 3.0 : name == "idm_n" ? 5.0 : 7.0;
      p.s0_min_gap = detail::num_or(params, "s0_min_gap", p.s0_min_gap);
      p.a_max = detail::num_or(params, "a_max", p.a_max);
      p.b_comf = detail::num_or(params, "b_comf", p.b_comf);
      p.T_headway = detail::num_or(params, "T_headway", p.T_headway);
      p.exponent = detail::num_or(params, "exponent", p.exponent);
      p.vehicle_length = detail::num_or(params, "vehicle_length", p.vehicle_length);
      p.v_free = detail::num_or(params, "v_free", p.v_free);
      p.b_cap = detail::num_or(params, "b_cap", p.b_cap);
      p.subtract_vehicle_length =
          detail::flag_or(params, "subtract_vehicle_length", p.subtract_vehicle_length);
      p.gap_floor = detail::num_or(params, "gap_floor", p.gap_floor);
      return std::make_unique<IdmModel>(p, name);
    }
    if (name == "acc_aeb") {
      detail::require_keys(params,
                           {},
                           {"ttc_threshold", "kp", "ki", "kv", "desired_time_headway",
                            "a_max_acc", "b_comf_acc", "b_max", "jerk_limit", "v_free",
                            "v_eps", "integral_cap"},
                           "model params");
      AccAebParams p;
      p.ttc_threshold = detail::num_or(params, "ttc_threshold", p.ttc_threshold);
      p.kp = detail::num_or(params, "kp", p.kp);
      p.ki = detail::num_or(params, "ki", p.ki);
      p.kv = detail::num_or(params, "kv", p.kv);
      p.desired_time_headway =
          detail::num_or(params, "desired_time_headway", p.desired_time_headway);
      p.a_max_acc = detail::num_or(params, "a_max_acc", p.a_max_acc);
      p.b_comf_acc = detail::num_or(params, "b_comf_acc", p.b_comf_acc);
      p.b_max = detail::num_or(params, "b_max", p.b_max);
      p.jerk_limit = detail::num_or(params, "jerk_limit", p.jerk_limit);
      p.v_free = detail::num_or(params, "v_free", p.v_free);
      p.v_eps = detail::num_or(params, "v_eps", p.v_eps);
      p.integral_cap = detail::num_or(params, "integral_cap", p.integral_cap);
      return std::make_unique<AccAebModel>(p);
    }
    if (name == "perfect_brake") {
      detail::require_keys(params, {}, {"b"}, "model params");
      return std::make_unique<PerfectBrakeModel>(detail::num_or(params, "b", 10.0));
    }
    if (name == "stochastic") {
      detail::require_keys(params, {"p_fail", "inner"}, {"seed"}, "model params");
      std::uint64_t seed = params.contains("seed")
                               ? params.at("seed").get<std::uint64_t>()
                               : detail::mix_seed(run_seed);
      return std::make_unique<StochasticBrakeDropout>(
          make_model(params.at("inner"), run_seed),
          params.at("p_fail").get<double>(), seed);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("model: malformed spec: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("model: ") + e.what());
  }
  throw std::runtime_error("model: unknown name '" + name + "'");
}

// A fully parsed quantification run configuration.
struct RunConfig {
  nlohmann::ordered_json model_spec;
  QuantConfig quant;
  std::vector<std::uint64_t> seeds;  // may be empty; the CLI can supply seeds
  std::string warm_start_path;       // empty = full-lattice initialization
  std::string out_dir = ".";
  nlohmann::ordered_json echo;  // the document as given, for output embedding
};

inline RunConfig parse_run_config(const std::string& text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("config parse error: ") + e.what());
  }
  try {
    if (!doc.is_object()) throw std::runtime_error("config: top level must be an object");
    detail::require_keys(doc, {"model", "policy", "bounds", "delta", "epsilon", "beta"},
                         {"sim", "seed", "seeds", "warm_start", "out_dir",
                          "max_total_runs", "cascade_edges", "normalized_nearest"},
                         "config");

    RunConfig rc;
    rc.echo = doc;
    rc.model_spec = doc.at("model");
    make_model(rc.model_spec, 0);  // validate the spec eagerly

    detail::require_keys(doc.at("bounds"), {"lower", "upper"}, {}, "bounds");
    rc.quant.bounds =
        StateBounds{detail::state_from_json(doc["bounds"]["lower"], "bounds.lower"),
                    detail::state_from_json(doc["bounds"]["upper"], "bounds.upper")};
    const auto& dj = doc.at("delta");
    if (!dj.is_array() || dj.size() != 3)
      throw std::runtime_error("config: delta must be a 3-element array");
    rc.quant.delta = Delta{dj[0].get<double>(), dj[1].get<double>(), dj[2].get<double>()};
    rc.quant.epsilon = doc.at("epsilon").get<double>();
    rc.quant.beta = doc.at("beta").get<double>();
    rc.quant.policy = policy_from_json(doc.at("policy"));

    rc.quant.sim = SimConfig{};
    if (doc.contains("sim")) {
      const auto& sj = doc["sim"];
      detail::require_keys(sj, {}, {"dt", "steps", "collision_headway"}, "sim");
      rc.quant.sim.dt = detail::num_or(sj, "dt", rc.quant.sim.dt);
      if (sj.contains("steps")) rc.quant.sim.K = sj.at("steps").get<int>();
      rc.quant.sim.collision_headway =
          detail::num_or(sj, "collision_headway", rc.quant.sim.collision_headway);
    }
    rc.quant.sim.bounds = rc.quant.bounds;

    if (doc.contains("seed") && doc.contains("seeds"))
      throw std::runtime_error("config: give either 'seed' or 'seeds', not both");
    if (doc.contains("seed")) rc.seeds = {doc["seed"].get<std::uint64_t>()};
    if (doc.contains("seeds"))
      for (const auto& s : doc["seeds"]) rc.seeds.push_back(s.get<std::uint64_t>());

    if (doc.contains("warm_start"))
      rc.warm_start_path = doc["warm_start"].get<std::string>();
    if (doc.contains("out_dir")) rc.out_dir = doc["out_dir"].get<std::string>();
    if (doc.contains("max_total_runs"))
      rc.quant.max_total_runs = doc["max_total_runs"].get<std::uint64_t>();
    rc.quant.cascade_edges = detail::flag_or(doc, "cascade_edges", false);
    rc.quant.normalized_nearest = detail::flag_or(doc, "normalized_nearest", false);

    rc.quant.validate();
    return rc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("config: malformed content: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("config: ") + e.what());
  }
}

}  // namespace safeset
