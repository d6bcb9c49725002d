// Command-line front end: quantify | validate | ncap | report.
//
// Exit codes: 0 success (including exhausted/capped quantifications, which are
// recorded outcomes, not tool failures), 2 configuration/schema error,
// 3 validation failure, 4 I/O error.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "safeset/analysis.hpp"
#include "safeset/quantifier.hpp"
#include "safeset/run_config.hpp"
#include "safeset/serialization.hpp"
#include "safeset/simulator.hpp"
#include "safeset/version.hpp"

namespace fs = std::filesystem;
using namespace safeset;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitValidation = 3;
constexpr int kExitIo = 4;

struct CliError : std::exception {
  int code;
  std::string msg;
  CliError(int c, std::string m) : code(c), msg(std::move(m)) {}
  const char* what() const noexcept override { return msg.c_str(); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(kExitIo, "cannot read file: " + path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::string tool_banner() {
  return std::string(kToolName) + " " + std::string(kToolVersion);
}

// A '#' meta line embedding the tool version and the configuration echo, for
// CSV outputs.
std::string csv_meta(const nlohmann::ordered_json& echo) {
  return tool_banner() + " config=" + echo.dump();
}

struct QuantifyOptions {
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  std::string warm_start;
  bool trace = false;
};

int cmd_quantify(const QuantifyOptions& opt) {
  RunConfig rc = parse_run_config(read_file(opt.config_path));
  if (!opt.seeds.empty()) rc.seeds = opt.seeds;
  if (!opt.out_dir.empty()) rc.out_dir = opt.out_dir;
  if (!opt.warm_start.empty()) rc.warm_start_path = opt.warm_start;
  if (rc.seeds.empty())
    throw CliError(kExitConfig, "no seeds: give them in the config or with --seed");

  std::error_code ec;
  fs::create_directories(rc.out_dir, ec);
  if (ec) throw CliError(kExitIo, "cannot create output directory: " + rc.out_dir);

  std::optional<LoadedDump> warm;
  if (!rc.warm_start_path.empty()) warm = load_dump(read_file(rc.warm_start_path));

  for (std::uint64_t seed : rc.seeds) {
    auto model = make_model(rc.model_spec, seed);
    QuantConfig cfg = rc.quant;
    cfg.seed = seed;

    fs::path trace_dir;
    RunObserver observer;
    if (opt.trace) {
      trace_dir = fs::path(rc.out_dir) /
                  ("traces_" + model->name() + "_seed" + std::to_string(seed));
      fs::create_directories(trace_dir, ec);
      if (ec) throw CliError(kExitIo, "cannot create trace directory");
      double dt = cfg.sim.dt;
      std::string meta = "# " + csv_meta(rc.echo) + " seed=" + std::to_string(seed);
      observer = [trace_dir, dt, meta](std::uint64_t index, const Trajectory& traj) {
        std::ostringstream os;
        write_trace_csv(os, traj, dt, meta + " run=" + std::to_string(index));
        write_file_atomic(trace_dir / ("run_" + std::to_string(index) + ".csv"),
                          os.str());
      };
    }

    SafeSetResult res =
        quantify(cfg, *model, warm ? &warm->grid : nullptr, observer);
    // The dump embeds the original config document (plus the effective seed),
    // not just the derived quantifier parameters.
    nlohmann::ordered_json echo = rc.echo;
    echo["seed"] = seed;
    echo.erase("seeds");
    if (!rc.warm_start_path.empty()) echo["warm_start"] = rc.warm_start_path;
    std::string stem = "safeset_" + model->name() + "_seed" + std::to_string(seed);
    fs::path dump_path = fs::path(rc.out_dir) / (stem + ".json");
    write_file_atomic(dump_path, dump_grid(res.grid, seed, echo, &res));

    std::ostringstream log;
    write_run_log_csv(log, res,
                      "# " + csv_meta(echo) + " seed=" + std::to_string(seed));
    write_file_atomic(fs::path(rc.out_dir) / (stem + "_runs.csv"), log.str());

    std::printf("seed %llu: %s after %llu runs (%llu collisions), %zu active cells -> %s\n",
                static_cast<unsigned long long>(seed),
                to_string(res.exit_reason),
                static_cast<unsigned long long>(res.total_runs),
                static_cast<unsigned long long>(res.collision_runs),
                res.grid.active_count(), dump_path.string().c_str());
  }
  return kExitOk;
}

int cmd_validate(const std::string& dump_path, const std::string& config_path,
                 const std::vector<std::uint64_t>& seeds) {
  LoadedDump loaded = load_dump(read_file(dump_path));
  RunConfig rc = parse_run_config(read_file(config_path));

  if (!(loaded.grid.bounds() == rc.quant.bounds) ||
      loaded.grid.delta() != rc.quant.delta)
    throw CliError(kExitConfig,
                   "dump geometry (bounds/delta) disagrees with the configuration");

  std::uint64_t seed = !seeds.empty() ? seeds.front()
                       : !rc.seeds.empty() ? rc.seeds.front()
                                           : 0;
  auto model = make_model(rc.model_spec, seed);
  Rng rng(seed);
  ValidationReport rep = validate(loaded.grid, *model, rc.quant.policy,
                                  rc.quant.epsilon, rc.quant.beta, rc.quant.sim, rng);

  std::printf("%s\n", tool_banner().c_str());
  std::printf("model: %s  epsilon: %g  beta: %g  seed: %llu\n", model->name().c_str(),
              rc.quant.epsilon, rc.quant.beta, static_cast<unsigned long long>(seed));
  std::printf("required runs: %llu  executed: %llu\n",
              static_cast<unsigned long long>(rep.required_runs),
              static_cast<unsigned long long>(rep.runs_executed));
  if (rep.passed) {
    std::printf("result: pass\n");
    return kExitOk;
  }
  std::printf("result: FAIL (%s)\n", to_string(rep.first_violation->cause));
  std::printf("first violation: run %llu step %zu at state (%.12g, %.12g, %.12g)\n",
              static_cast<unsigned long long>(rep.first_violation->run_index),
              rep.first_violation->step_index, rep.first_violation->state.d,
              rep.first_violation->state.v0, rep.first_violation->state.v1);
  return kExitValidation;
}

int cmd_ncap(const std::string& config_path, std::string out_dir) {
  NcapConfig cfg = parse_ncap_config(read_file(config_path));
  auto model = make_model(cfg.model_spec, cfg.seed);
  auto outcomes = ncap_battery(*model, cfg.scenarios, cfg.repeats, cfg.sim, cfg.seed);

  if (out_dir.empty()) out_dir = ".";
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw CliError(kExitIo, "cannot create output directory: " + out_dir);

  std::ostringstream os;
  write_battery_csv(os, cfg.scenarios, outcomes, csv_meta(cfg.echo));
  fs::path csv_path = fs::path(out_dir) / ("battery_" + model->name() + ".csv");
  write_file_atomic(csv_path, os.str());

  std::map<NcapKind, std::pair<int, int>> tally;  // kind -> (passed, total)
  for (const auto& o : outcomes) {
    auto& [passed, total] = tally[cfg.scenarios[o.scenario].kind];
    passed += o.passed ? 1 : 0;
    ++total;
  }
  std::printf("%s  model: %s\n", tool_banner().c_str(), model->name().c_str());
  for (const auto& [kind, counts] : tally)
    std::printf("%s: %d/%d passed\n", to_string(kind), counts.first, counts.second);
  std::printf("battery results -> %s\n", csv_path.string().c_str());
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& dump_paths, const std::string& out_dir) {
  if (dump_paths.empty()) throw CliError(kExitConfig, "report: no dump files given");

  struct Group {
    std::string sv;
    std::string s0;
    double epsilon = 0.0;
    std::vector<SafeSetResult> results;
  };
  std::map<std::string, Group> groups;  // keyed by the config echo minus seeds

  for (const auto& path : dump_paths) {
    LoadedDump loaded = load_dump(read_file(path));
    if (!loaded.result)
      throw CliError(kExitConfig, "not a quantification dump (no result block): " + path);
    if (!loaded.config_echo.contains("model") || !loaded.config_echo.contains("epsilon"))
      throw CliError(kExitConfig, "dump lacks a usable config echo: " + path);

    nlohmann::ordered_json key = loaded.config_echo;
    key.erase("seed");
    key.erase("seeds");
    Group& g = groups[key.dump()];
    if (g.results.empty()) {
      g.sv = make_model(loaded.config_echo["model"], 0)->name();
      g.s0 = loaded.config_echo.contains("warm_start") ? "warm" : "full";
      g.epsilon = loaded.config_echo["epsilon"].get<double>();
    }
    SafeSetResult res(std::move(loaded.grid));
    res.total_runs = loaded.result->total_runs;
    res.collision_runs = loaded.result->collision_runs;
    g.results.push_back(std::move(res));
  }

  std::vector<SummaryRow> rows;
  for (auto& [key, g] : groups)
    rows.push_back(SummaryRow{g.sv, g.s0, g.epsilon, summarize(g.results)});

  std::ostringstream os;
  write_summary_csv(os, rows, tool_banner() + " dumps=" + std::to_string(dump_paths.size()));
  std::fputs(os.str().c_str(), stdout);

  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw CliError(kExitIo, "cannot create output directory: " + out_dir);
    write_file_atomic(fs::path(out_dir) / "summary.csv", os.str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{tool_banner() +
               " - epsilon-delta almost safe set quantification for "
               "longitudinal car-following controllers"};
  app.set_version_flag("--version", tool_banner());
  app.require_subcommand(1);

  QuantifyOptions qopt;
  auto* q = app.add_subcommand("quantify",
                               "Run the guided quantification loop, one dump per seed");
  q->add_option("--config", qopt.config_path, "Run configuration (JSON)")->required();
  q->add_option("--seed", qopt.seeds, "Seed(s), overriding the config");
  q->add_option("--out", qopt.out_dir, "Output directory");
  q->add_option("--warm-start", qopt.warm_start, "Prior dump to initialize the grid from");
  q->add_flag("--trace", qopt.trace, "Write a per-run trajectory CSV");

  std::string v_dump, v_config;
  std::vector<std::uint64_t> v_seeds;
  auto* v = app.add_subcommand("validate",
                               "Check a dumped set with fresh independent runs");
  v->add_option("dump", v_dump, "Safe-set dump to validate")->required();
  v->add_option("--config", v_config, "Run configuration (JSON)")->required();
  v->add_option("--seed", v_seeds, "Validation seed");

  std::string n_config, n_out;
  auto* n = app.add_subcommand("ncap", "Run the concrete-scenario battery");
  n->add_option("--config", n_config, "Battery configuration (JSON)")->required();
  n->add_option("--out", n_out, "Output directory");

  std::vector<std::string> r_dumps;
  std::string r_out;
  auto* r = app.add_subcommand("report", "Summarize quantification dumps");
  r->add_option("dumps", r_dumps, "Dump files to aggregate");
  r->add_option("--out", r_out, "Directory for summary.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (q->parsed()) return cmd_quantify(qopt);
    if (v->parsed()) return cmd_validate(v_dump, v_config, v_seeds);
    if (n->parsed()) return cmd_ncap(n_config, n_out);
    if (r->parsed()) return cmd_report(r_dumps, r_out);
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
