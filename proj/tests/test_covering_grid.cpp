#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "safeset/covering_grid.hpp"
#include "safeset/rng.hpp"

using namespace safeset;

namespace {

StateBounds car_bounds() {
  return StateBounds{State{0.0, 0.0, 0.0}, State{100.0, 30.0, 30.0}};
}

std::set<double> axis_centroids(const CoveringGrid& g, int axis) {
  std::set<double> out;
  for (auto id : g.active_ids()) out.insert(state_axis(g.centroid(id), axis));
  return out;
}

}  // namespace

TEST_CASE("45-cell lattice has the expected centroids") {
  CoveringGrid g(car_bounds(), Delta{10.0, 6.0, 6.0});
  REQUIRE(g.active_count() == 45);
  REQUIRE(g.lattice_cell_count() == 45);
  REQUIRE(axis_centroids(g, 0) == std::set<double>{10.0, 30.0, 50.0, 70.0, 90.0});
  REQUIRE(axis_centroids(g, 1) == std::set<double>{6.0, 18.0, 30.0});
  REQUIRE(axis_centroids(g, 2) == std::set<double>{6.0, 18.0, 30.0});
}

TEST_CASE("320-cell lattice has the expected centroids") {
  CoveringGrid g(car_bounds(), Delta{10.0, 2.0, 2.0});
  REQUIRE(g.active_count() == 320);
  REQUIRE(axis_centroids(g, 1) ==
          std::set<double>{2.0, 6.0, 10.0, 14.0, 18.0, 22.0, 26.0, 30.0});
}

TEST_CASE("single cell per dimension when 2*delta covers the range") {
  // 1-D picture: range [0,10] with delta 10 -> one cell centered at 5 whose
  // neighborhood [-5,15], clipped to bounds, covers everything.
  StateBounds b{State{0.0, 0.0, 0.0}, State{10.0, 30.0, 30.0}};
  CoveringGrid g(b, Delta{10.0, 30.0, 30.0});
  REQUIRE(g.active_count() == 1);
  REQUIRE(g.centroid(g.active_ids()[0]) == State{5.0, 15.0, 15.0});
}

TEST_CASE("last lattice centroid is clipped to the upper bound") {
  // d in [0,34], delta 8: natural centroids 8, 24, 40 -> 40 clips to 34.
  StateBounds b{State{0.0, 0.0, 0.0}, State{34.0, 30.0, 30.0}};
  CoveringGrid g(b, Delta{8.0, 30.0, 30.0});
  REQUIRE(axis_centroids(g, 0) == std::set<double>{8.0, 24.0, 34.0});
}

TEST_CASE("delta must be positive") {
  REQUIRE_THROWS_AS(CoveringGrid(car_bounds(), Delta{10.0, 0.0, 6.0}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(CoveringGrid(car_bounds(), Delta{-1.0, 6.0, 6.0}),
                    std::invalid_argument);
}

TEST_CASE("coverage: uniform points always within delta of an active centroid") {
  const Delta deltas[] = {Delta{10.0, 6.0, 6.0}, Delta{10.0, 2.0, 2.0}};
  for (const Delta& delta : deltas) {
    CoveringGrid g(car_bounds(), delta);
    Rng rng(12345);
    for (int n = 0; n < 100000; ++n) {
      State s{uniform_real(rng, 0.0, 100.0), uniform_real(rng, 0.0, 30.0),
              uniform_real(rng, 0.0, 30.0)};
      auto cell = g.cell_of(s);
      REQUIRE(cell.has_value());
      const State& c = g.centroid(*cell);
      for (int i = 0; i < kStateDims; ++i)
        REQUIRE(std::abs(state_axis(s, i) - state_axis(c, i)) <= delta[i]);
    }
  }
}

TEST_CASE("every centroid lies inside bounds") {
  CoveringGrid g(car_bounds(), Delta{7.0, 4.0, 11.0});
  for (auto id : g.active_ids()) REQUIRE(car_bounds().contains(g.centroid(id)));
}

TEST_CASE("cell_of returns a centroid's own cell") {
  CoveringGrid g(car_bounds(), Delta{10.0, 6.0, 6.0});
  for (auto id : g.active_ids()) {
    auto found = g.cell_of(g.centroid(id));
    REQUIRE(found.has_value());
    REQUIRE(*found == id);
  }
}

TEST_CASE("cell_of tie-break: nearest centroid, then lowest index") {
  CoveringGrid g(car_bounds(), Delta{10.0, 6.0, 6.0});
  // (20,12,12) is equidistant between the d-centroids 10 and 30 and between
  // both speed centroids 6 and 18: the lowest-index covering cell wins.
  auto cell = g.cell_of(State{20.0, 12.0, 12.0});
  REQUIRE(cell.has_value());
  REQUIRE(g.centroid(*cell) == State{10.0, 6.0, 6.0});

  // Exhaustive check of the documented rule: no covering active cell is
  // strictly nearer, and none with equal distance has a lower id.
  const State probe{20.0, 12.0, 12.0};
  auto dist2 = [&](CoveringGrid::CellId id) {
    const State& c = g.centroid(id);
    double acc = 0;
    for (int i = 0; i < kStateDims; ++i) {
      double t = state_axis(probe, i) - state_axis(c, i);
      acc += t * t;
    }
    return acc;
  };
  const Delta delta{10.0, 6.0, 6.0};
  for (auto id : g.active_ids()) {
    bool covers = true;
    for (int i = 0; i < kStateDims; ++i)
      covers &= std::abs(state_axis(probe, i) - state_axis(g.centroid(id), i)) <= delta[i];
    if (!covers) continue;
    REQUIRE(dist2(id) >= dist2(*cell));
    if (dist2(id) == dist2(*cell)) REQUIRE(id >= *cell);
  }
}

TEST_CASE("cell_of on empty grid returns none") {
  CoveringGrid g(car_bounds(), Delta{10.0, 6.0, 6.0});
  for (auto id : std::vector(g.active_ids())) g.remove(id);
  REQUIRE(g.empty());
  REQUIRE(!g.cell_of(State{50.0, 15.0, 15.0}).has_value());
}

TEST_CASE("nearest_centroid basics and out-of-bounds query") {
  CoveringGrid g(car_bounds(), Delta{10.0, 6.0, 6.0});
  // A centroid maps to itself.
  auto some = g.active_ids()[7];
  REQUIRE(*g.nearest_centroid(g.centroid(some)) == some);
  // d=19 between d-centroids 10 and 30 at matching speeds: 9 < 11.
  auto near = g.nearest_centroid(State{19.0, 6.0, 6.0});
  REQUIRE(g.centroid(*near) == State{10.0, 6.0, 6.0});
  // Out-of-bounds d=120: nearest boundary centroid at d=90 (raw-unit distance).
  auto far = g.nearest_centroid(State{120.0, 6.0, 6.0});
  REQUIRE(g.centroid(*far) == State{90.0, 6.0, 6.0});
  // Empty grid signals exhaustion.
  for (auto id : std::vector(g.active_ids())) g.remove(id);
  REQUIRE(!g.nearest_centroid(State{50.0, 6.0, 6.0}).has_value());
}

TEST_CASE("removal monotonicity") {
  CoveringGrid g(car_bounds(), Delta{10.0, 6.0, 6.0});
  auto victim = *g.cell_of(State{50.0, 18.0, 18.0});
  std::size_t before = g.active_count();
  g.remove(victim);
  REQUIRE(g.active_count() == before - 1);
  REQUIRE(!g.is_active(victim));
  auto relocated = g.cell_of(State{50.0, 18.0, 18.0});
  if (relocated.has_value()) REQUIRE(*relocated != victim);
  // Removing twice is a no-op on the count.
  g.remove(victim);
  REQUIRE(g.active_count() == before - 1);
}

TEST_CASE("expansion centroids are stored exactly and become samplable cells") {
  CoveringGrid g(car_bounds(), Delta{10.0, 6.0, 6.0});
  // Hollow out a region, then add an exact visited state back.
  auto hole = *g.cell_of(State{50.0, 18.0, 18.0});
  g.remove(hole);
  State visited{51.37, 17.21, 16.05};
  auto added = g.add_centroid(visited);
  REQUIRE(g.is_active(added));
  REQUIRE(g.centroid(added) == visited);
  REQUIRE(*g.cell_of(visited) == added);
  REQUIRE_THROWS_AS(g.add_centroid(State{120.0, 0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("sample_centroid is uniform over active cells") {
  CoveringGrid g(car_bounds(), Delta{10.0, 6.0, 6.0});
  Rng rng(99);
  const int draws = 100000;
  std::map<CoveringGrid::CellId, int> freq;
  for (int i = 0; i < draws; ++i) ++freq[*g.sample_centroid(rng)];
  const double p = 1.0 / 45.0;
  const double sigma = std::sqrt(p * (1 - p) / draws);
  for (auto id : g.active_ids()) {
    double f = static_cast<double>(freq[id]) / draws;
    REQUIRE(std::abs(f - p) <= 4.0 * sigma);
  }
}

TEST_CASE("sampling is deterministic for a fixed seed") {
  CoveringGrid g(car_bounds(), Delta{10.0, 6.0, 6.0});
  Rng a(7), b(7);
  for (int i = 0; i < 1000; ++i)
    REQUIRE(*g.sample_centroid(a) == *g.sample_centroid(b));
  Rng empty_rng(1);
  for (auto id : std::vector(g.active_ids())) g.remove(id);
  REQUIRE(!g.sample_centroid(empty_rng).has_value());
}

TEST_CASE("lattice snapping maps points to their containing block") {
  CoveringGrid g(car_bounds(), Delta{10.0, 6.0, 6.0});
  REQUIRE(g.snap_to_lattice(State{0.0, 0.0, 0.0}) == std::array<int, 3>{0, 0, 0});
  REQUIRE(g.snap_to_lattice(State{100.0, 30.0, 30.0}) == std::array<int, 3>{4, 2, 2});
  REQUIRE(g.snap_to_lattice(State{39.9, 12.1, 23.9}) == std::array<int, 3>{1, 1, 1});
  REQUIRE(g.snap_to_lattice(State{40.0, 24.0, 11.9}) == std::array<int, 3>{2, 2, 0});
}

TEST_CASE("normalized nearest weights dimensions by 1/delta") {
  // On the regular lattice normalization cannot flip the winner (every d-slice
  // offers the same best speed error), so exercise it with expansion centroids.
  CoveringGrid g(car_bounds(), Delta{10.0, 6.0, 6.0});
  for (auto id : std::vector(g.active_ids())) g.remove(id);
  auto a = g.add_centroid(State{50.0, 10.0, 6.0});  // probe error (0, 5, 0)
  auto b = g.add_centroid(State{42.0, 15.0, 6.0});  // probe error (8, 0, 0)
  const State probe{50.0, 15.0, 6.0};
  // Raw: 5.0 < 8.0 -> a. Normalized: 5/6 = 0.833 > 8/10 = 0.8 -> b.
  REQUIRE(*g.nearest_centroid(probe) == a);
  g.set_nearest_normalized(true);
  REQUIRE(*g.nearest_centroid(probe) == b);
  g.set_nearest_normalized(false);
  REQUIRE(*g.nearest_centroid(probe) == a);
}
