#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "safeset/quantifier.hpp"
#include "safeset/serialization.hpp"
#include "safeset/version.hpp"

using namespace safeset;
using nlohmann::json;

namespace {

CoveringGrid standard_grid() {
  StateBounds bounds{State{0.0, 0.0, 0.0}, State{100.0, 30.0, 30.0}};
  return CoveringGrid(bounds, Delta{10.0, 6.0, 6.0});
}

bool same_bits(double a, double b) {
  return std::memcmp(&a, &b, sizeof(double)) == 0;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("dump emits the required fields") {
  CoveringGrid g = standard_grid();
  json echo = {{"model", "idm_n"}, {"epsilon", 0.01}};
  std::string text = dump_grid(g, 1234, echo);

  json doc = json::parse(text);
  REQUIRE(doc.at("format") == "safeset-dump");
  REQUIRE(doc.at("format_version") == 1);
  REQUIRE(doc.at("tool_version") == std::string(kToolVersion));
  REQUIRE(doc.at("bounds").at("lower").size() == 3);
  REQUIRE(doc.at("bounds").at("upper").size() == 3);
  REQUIRE(doc.at("delta").size() == 3);
  REQUIRE(doc.at("active_centroids").size() == 45);
  REQUIRE(doc.at("removed_cell_count") == 0);
  REQUIRE(doc.at("seed") == 1234);
  REQUIRE(doc.at("config_echo").at("model") == "idm_n");
  REQUIRE(doc.at("config_echo").at("epsilon") == 0.01);
  // A plain grid dump carries no result block.
  REQUIRE(!doc.contains("result"));
}

TEST_CASE("round trip preserves the active set bitwise") {
  CoveringGrid g = standard_grid();
  // Knock out a few lattice cells.
  std::vector<CoveringGrid::CellId> removed = {0, 7, 13, 21, 44};
  for (auto id : removed) g.remove(id);
  // Extras at awkward doubles, one of which is pruned again.
  auto e1 = g.add_centroid(State{100.0 / 3.0, 0.1 + 0.2, 29.999999999999996});
  auto e2 = g.add_centroid(State{1e-9, 1.0 / 7.0, 15.0});
  auto e3 = g.add_centroid(State{55.5, 12.25, 0.75});
  g.remove(e2);

  std::string text = dump_grid(g, 99, json::object());
  LoadedDump loaded = load_dump(text);

  REQUIRE(active_set_equal(g, loaded.grid));
  REQUIRE(loaded.seed == 99);
  REQUIRE(loaded.grid.removed_lattice_count() == removed.size());
  // The pruned extra is forgotten by the format: only live extras come back.
  REQUIRE(loaded.grid.cell_count() == loaded.grid.lattice_cell_count() + 2);
  // Bitwise centroid fidelity for the surviving extras.
  State s1 = loaded.grid.centroid(
      static_cast<CoveringGrid::CellId>(loaded.grid.lattice_cell_count()));
  State s3 = loaded.grid.centroid(
      static_cast<CoveringGrid::CellId>(loaded.grid.lattice_cell_count() + 1));
  REQUIRE(same_bits(s1.d, g.centroid(e1).d));
  REQUIRE(same_bits(s1.v0, g.centroid(e1).v0));
  REQUIRE(same_bits(s1.v1, g.centroid(e1).v1));
  REQUIRE(same_bits(s3.d, g.centroid(e3).d));
  REQUIRE(same_bits(s3.v0, g.centroid(e3).v0));
  REQUIRE(same_bits(s3.v1, g.centroid(e3).v1));
}

TEST_CASE("dump of a loaded dump is byte-identical") {
  CoveringGrid g = standard_grid();
  g.remove(3);
  g.remove(17);
  auto ex = g.add_centroid(State{42.0, 3.0, 3.0});
  g.add_centroid(State{77.7, 21.0, 9.0});
  g.remove(ex);

  json echo = {{"policy", "stationary"}};
  std::string first = dump_grid(g, 7, echo);
  LoadedDump loaded = load_dump(first);
  std::string second = dump_grid(loaded.grid, loaded.seed, loaded.config_echo);
  REQUIRE(first == second);
}

TEST_CASE("result counters survive the round trip") {
  QuantConfig cfg;
  cfg.epsilon = 0.01;
  cfg.beta = 0.001;
  cfg.bounds = StateBounds{State{0.0, 0.0, 0.0}, State{100.0, 30.0, 30.0}};
  cfg.delta = Delta{10.0, 6.0, 6.0};
  cfg.sim.bounds = cfg.bounds;
  cfg.policy = LeadPolicy::stationary();
  cfg.seed = 42;

  SafeSetResult res(make_initial_grid(cfg));
  res.total_runs = 123;
  res.collision_runs = 7;
  res.consecutive_safe_at_exit = 688;
  res.exit_reason = ExitReason::kValidated;
  res.seed = 42;
  res.config = cfg;

  std::string text = dump_result(res);
  LoadedDump loaded = load_dump(text);
  REQUIRE(loaded.result.has_value());
  REQUIRE(loaded.result->total_runs == 123);
  REQUIRE(loaded.result->collision_runs == 7);
  REQUIRE(loaded.result->consecutive_safe_at_exit == 688);
  REQUIRE(loaded.result->exit_reason == "validated");
  REQUIRE(loaded.seed == 42);
  REQUIRE(active_set_equal(res.grid, loaded.grid));
  // The config echo reflects the run parameters.
  REQUIRE(loaded.config_echo.at("epsilon") == 0.01);
  REQUIRE(loaded.config_echo.at("beta") == 0.001);
}

TEST_CASE("malformed dumps are rejected") {
  CoveringGrid g = standard_grid();
  std::string good = dump_grid(g, 0, json::object());

  SECTION("not JSON at all") {
    REQUIRE_THROWS_AS(load_dump("this is not json"), std::runtime_error);
  }
  SECTION("wrong format tag") {
    json doc = json::parse(good);
    doc["format"] = "something-else";
    REQUIRE_THROWS_AS(load_dump(doc.dump()), std::runtime_error);
  }
  SECTION("unsupported format version") {
    json doc = json::parse(good);
    doc["format_version"] = 2;
    REQUIRE_THROWS_AS(load_dump(doc.dump()), std::runtime_error);
  }
  SECTION("missing required field") {
    json doc = json::parse(good);
    doc.erase("delta");
    REQUIRE_THROWS_AS(load_dump(doc.dump()), std::runtime_error);
  }
  SECTION("unknown top-level key") {
    json doc = json::parse(good);
    doc["surprise"] = 1;
    REQUIRE_THROWS_AS(load_dump(doc.dump()), std::runtime_error);
  }
  SECTION("centroid with wrong arity") {
    json doc = json::parse(good);
    doc["active_centroids"][0] = json::array({1.0, 2.0});
    REQUIRE_THROWS_AS(load_dump(doc.dump()), std::runtime_error);
  }
  SECTION("centroid outside the bounds") {
    json doc = json::parse(good);
    doc["active_centroids"][0] = json::array({500.0, 6.0, 6.0});
    REQUIRE_THROWS_AS(load_dump(doc.dump()), std::runtime_error);
  }
}

TEST_CASE("empty active set round-trips") {
  CoveringGrid g = standard_grid();
  for (auto id : std::vector(g.active_ids())) g.remove(id);
  std::string text = dump_grid(g, 5, json::object());
  LoadedDump loaded = load_dump(text);
  REQUIRE(loaded.grid.active_count() == 0);
  REQUIRE(active_set_equal(g, loaded.grid));
}

TEST_CASE("active-set equality notices every kind of difference") {
  CoveringGrid a = standard_grid();
  CoveringGrid b = standard_grid();
  REQUIRE(active_set_equal(a, b));

  SECTION("different lattice statuses") {
    b.remove(12);
    REQUIRE(!active_set_equal(a, b));
  }
  SECTION("different extras") {
    a.add_centroid(State{50.0, 15.0, 15.0});
    REQUIRE(!active_set_equal(a, b));
    b.add_centroid(State{50.0, 15.0, 15.0});
    REQUIRE(active_set_equal(a, b));
  }
  SECTION("different delta") {
    CoveringGrid c(StateBounds{State{0.0, 0.0, 0.0}, State{100.0, 30.0, 30.0}},
                   Delta{10.0, 6.0, 3.0});
    REQUIRE(!active_set_equal(a, c));
  }
}

TEST_CASE("atomic write lands the full content") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "safeset_ser_test";
  fs::create_directories(dir);
  fs::path target = dir / "dump.json";

  write_file_atomic(target, "first version\n");
  REQUIRE(slurp(target) == "first version\n");
  write_file_atomic(target, "second version\n");
  REQUIRE(slurp(target) == "second version\n");
  // No leftover temporary files.
  std::size_t entries = 0;
  for (auto& e : fs::directory_iterator(dir)) {
    (void)e;
    ++entries;
  }
  REQUIRE(entries == 1);
  fs::remove_all(dir);
}

TEST_CASE("random grids round-trip exactly") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    CoveringGrid g = standard_grid();
    std::uniform_int_distribution<int> coin(0, 2);
    for (auto id : std::vector(g.active_ids()))
      if (coin(rng) == 0) g.remove(id);
    std::uniform_real_distribution<double> ud(0.0, 100.0);
    std::uniform_real_distribution<double> uv(0.0, 30.0);
    int extras = coin(rng) + coin(rng);
    for (int i = 0; i < extras; ++i)
      g.add_centroid(State{ud(rng), uv(rng), uv(rng)});

    std::string text = dump_grid(g, trial, json::object());
    LoadedDump loaded = load_dump(text);
    REQUIRE(active_set_equal(g, loaded.grid));
    REQUIRE(dump_grid(loaded.grid, loaded.seed, loaded.config_echo) == text);
  }
}
