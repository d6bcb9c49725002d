// Acceptance gate: one pass/fail line per shipped behavioral guarantee.
// Exits nonzero if any criterion fails. Everything here runs against the
// shipped configs so the gate also notices accidental config drift.

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "safeset/analysis.hpp"
#include "safeset/quantifier.hpp"
#include "safeset/run_config.hpp"
#include "safeset/vehicle_models.hpp"

using namespace safeset;
using CellId = CoveringGrid::CellId;

namespace {

int g_failures = 0;

void record(int id, const std::string& what, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", id, what.c_str(),
              detail.c_str());
  if (!ok) ++g_failures;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::string config_path(const char* name) {
  return std::string(SAFESET_SOURCE_DIR) + "/configs/" + name;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double m = mean_of(xs), acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

// Exploration-graph closure: no surviving cell may owe its coverage claim to
// a cell that was pruned away.
bool closure_holds(const SafeSetResult& res, std::string& why) {
  for (const auto& [from, to] : res.exploration_graph.edges()) {
    if (res.grid.is_active(from) && !res.grid.is_active(to)) {
      why = fmt("edge %u -> %u leaves the surviving set", from, to);
      return false;
    }
  }
  return true;
}

struct VariantRuns {
  std::vector<SafeSetResult> by_seed;  // one per config seed, in order
};

}  // namespace

int main() {
  // --- 1: validation run counts -------------------------------------------
  {
    std::uint64_t a = required_consecutive_runs(0.01, 0.001);
    std::uint64_t b = required_consecutive_runs(0.1, 0.001);
    record(1, "validation run counts", a == 688 && b == 66,
           fmt("N(0.01,0.001)=%llu expect 688, N(0.1,0.001)=%llu expect 66",
               static_cast<unsigned long long>(a), static_cast<unsigned long long>(b)));
  }

  // --- 2: covering completeness of freshly built grids ---------------------
  {
    StateBounds bounds{State{0.0, 0.0, 0.0}, State{100.0, 30.0, 30.0}};
    bool ok = true;
    std::string detail;
    struct Case {
      Delta delta;
      std::size_t cells;
    } cases[] = {{Delta{10.0, 6.0, 6.0}, 45}, {Delta{10.0, 2.0, 2.0}, 320}};
    for (const auto& c : cases) {
      CoveringGrid g(bounds, c.delta);
      if (g.lattice_cell_count() != c.cells) {
        ok = false;
        detail = fmt("lattice has %zu cells, expected %zu", g.lattice_cell_count(), c.cells);
        break;
      }
      Rng rng(2024);
      for (int i = 0; i < 100000; ++i) {
        State s{uniform_real(rng, 0.0, 100.0), uniform_real(rng, 0.0, 30.0),
                uniform_real(rng, 0.0, 30.0)};
        if (!g.cell_of(s)) {
          ok = false;
          detail = fmt("point (%g,%g,%g) not within delta of any centroid (%zu-cell grid)",
                       s.d, s.v0, s.v1, c.cells);
          break;
        }
      }
      if (!ok) break;
    }
    if (ok) detail = "100000 uniform points covered on the 45- and 320-cell grids";
    record(2, "covering completeness", ok, detail);
  }

  // --- 3: ideal-braking set matches the analytic stopping-distance rule ----
  SafeSetResult pb_res{CoveringGrid{StateBounds{State{0, 0, 0}, State{1, 1, 1}},
                                    Delta{1, 1, 1}}};
  {
    RunConfig rc = parse_run_config(slurp(config_path("perfect_brake.json")));
    auto model = make_model(rc.model_spec, rc.seeds.at(0));
    QuantConfig cfg = rc.quant;
    cfg.seed = rc.seeds.at(0);
    pb_res = quantify(cfg, *model);

    const CoveringGrid& g = pb_res.grid;
    const double dd = cfg.delta[0], dv = cfg.delta[1];
    bool ok = true;
    std::string detail = fmt("%zu of %zu lattice cells active, boundary-layer tolerance",
                             g.active_lattice_count(), g.lattice_cell_count());
    for (CellId id = 0; id < g.lattice_cell_count() && ok; ++id) {
      State c = g.centroid(id);
      bool analytic = c.v0 * c.v0 / 20.0 < c.d;
      if (g.is_active(id) == analytic) continue;
      // Disagreement is only tolerable within one cell layer of the analytic
      // boundary: the rule's zero level must pass through the cell's box
      // expanded by one cell pitch.
      double d_lo = std::max(c.d - 3.0 * dd, 0.0), d_hi = c.d + 3.0 * dd;
      double v_lo = std::max(c.v0 - 3.0 * dv, 0.0), v_hi = c.v0 + 3.0 * dv;
      double f_min = d_lo - v_hi * v_hi / 20.0;
      double f_max = d_hi - v_lo * v_lo / 20.0;
      if (!(f_min <= 0.0 && 0.0 <= f_max)) {
        ok = false;
        detail = fmt("cell (%g,%g,%g): active=%d but stopping rule says %d, far from boundary",
                     c.d, c.v0, c.v1, int(g.is_active(id)), int(analytic));
      }
    }
    record(3, "ideal-braking set matches v0^2/(2b) stopping rule", ok, detail);
  }

  // --- 4..7 share the full quantification sweep over the three variants ----
  std::map<std::string, VariantRuns> full;   // idm_m / idm_n / idm_h
  std::map<std::string, RunConfig> configs;  // parsed shipped configs
  for (const char* name : {"idm_m.json", "idm_n.json", "idm_h.json"}) {
    RunConfig rc = parse_run_config(slurp(config_path(name)));
    std::string key = rc.model_spec.at("name").get<std::string>();
    for (std::uint64_t seed : rc.seeds) {
      auto model = make_model(rc.model_spec, seed);
      QuantConfig cfg = rc.quant;
      cfg.seed = seed;
      full[key].by_seed.push_back(quantify(cfg, *model));
    }
    configs.emplace(key, std::move(rc));
  }

  // --- 4: stricter brake caps shrink the quantified set --------------------
  {
    const CoveringGrid& gm = full["idm_m"].by_seed[0].grid;
    const CoveringGrid& gn = full["idm_n"].by_seed[0].grid;
    const CoveringGrid& gh = full["idm_h"].by_seed[0].grid;
    auto vm = volume(gm), vn = volume(gn), vh = volume(gh);
    std::set<CellId> bm = detail::occupied_blocks(gm);
    std::set<CellId> bh = detail::occupied_blocks(gh);
    bool contained = std::includes(bh.begin(), bh.end(), bm.begin(), bm.end());
    bool ok = vm.first < vn.first && vn.first < vh.first && contained;
    record(4, "variant ordering: weakest set smallest, strongest largest", ok,
           fmt("occupied blocks m=%zu n=%zu h=%zu, m within h: %s", vm.first, vn.first,
               vh.first, contained ? "yes" : "no"));
  }

  // --- 5: run budget and collision-count stability --------------------------
  {
    bool budget_ok = true;
    std::uint64_t worst = 0;
    for (const auto& [key, runs] : full)
      for (const auto& r : runs.by_seed) {
        worst = std::max(worst, r.total_runs);
        if (r.total_runs >= 3000) budget_ok = false;
      }
    auto collision_std = [&](const std::string& key) {
      std::vector<double> xs;
      for (const auto& r : full[key].by_seed)
        xs.push_back(static_cast<double>(r.collision_runs));
      return sample_std(xs);
    };
    double sm = collision_std("idm_m"), sh = collision_std("idm_h");
    bool ok = budget_ok && sm <= 2.0 && sh <= 2.0;
    record(5, "run budget under 3000 and stable collision counts", ok,
           fmt("max runs %llu, collision std m=%.3f h=%.3f (cap 2.0)",
               static_cast<unsigned long long>(worst), sm, sh));
  }

  // --- 6: seed-to-seed agreement ---------------------------------------------
  {
    bool ok = true;
    std::string detail;
    for (const auto& [key, runs] : full) {
      std::vector<const CoveringGrid*> grids;
      for (const auto& r : runs.by_seed) grids.push_back(&r.grid);
      double j = iou(grids);
      detail += fmt("%s%s=%.4f", detail.empty() ? "" : " ", key.c_str(), j);
      if (j < 0.95) ok = false;
    }
    record(6, "intersection-over-union across 5 seeds at least 0.95", ok, detail);
  }

  // --- 7: warm starts cut the collision cost of re-quantification -----------
  std::map<std::string, VariantRuns> warm;  // idm_m / idm_n warm-started from idm_h
  {
    const CoveringGrid& prior = full["idm_h"].by_seed[0].grid;
    bool ok = true;
    std::string detail;
    for (const std::string key : {std::string("idm_n"), std::string("idm_m")}) {
      const RunConfig& rc = configs.at(key);
      std::vector<double> full_cols, warm_cols;
      for (std::size_t i = 0; i < rc.seeds.size(); ++i) {
        std::uint64_t seed = rc.seeds[i];
        auto model = make_model(rc.model_spec, seed);
        QuantConfig cfg = rc.quant;
        cfg.seed = seed;
        warm[key].by_seed.push_back(quantify(cfg, *model, &prior));
        warm_cols.push_back(static_cast<double>(warm[key].by_seed.back().collision_runs));
        full_cols.push_back(static_cast<double>(full[key].by_seed[i].collision_runs));
      }
      double mw = mean_of(warm_cols), mf = mean_of(full_cols);
      detail += fmt("%s%s warm=%.1f full=%.1f", detail.empty() ? "" : ", ", key.c_str(),
                    mw, mf);
      if (!(mw < mf)) ok = false;
    }
    record(7, "warm start lowers mean collision runs", ok, detail);
  }

  // --- 8: moderate variant brakes for a receding faster lead ----------------
  {
    auto m = make_idm_m();
    double a = m->accel(State{40.0, 12.0, 25.0}, 0.1);
    double expect = -0.198031538449;
    bool ok = a < 0.0 && std::abs(a - expect) < 1e-9;
    record(8, "deceleration commanded despite an opening gap", ok,
           fmt("accel(d=40,v0=12,v1=25)=%.12f expect %.12f", a, expect));
  }

  // --- 9: stochastic dropout set keeps its escape guarantee ------------------
  {
    RunConfig rc = parse_run_config(slurp(config_path("stochastic_idm.json")));
    auto model = make_model(rc.model_spec, rc.seeds.at(0));
    QuantConfig cfg = rc.quant;
    cfg.seed = rc.seeds.at(0);
    SafeSetResult res = quantify(cfg, *model);

    const CoveringGrid& g = res.grid;
    // Fast containment: lattice-block hit first, extras scan as fallback.
    std::vector<CellId> extras;
    for (CellId id : g.active_ids())
      if (g.is_extra(id)) extras.push_back(id);
    auto covered = [&](const State& s) {
      auto blk = g.snap_to_lattice(s);
      auto dims = g.lattice_dims();
      CellId block =
          static_cast<CellId>((blk[0] * dims[1] + blk[1]) * dims[2] + blk[2]);
      if (g.is_active(block) && g.covers(block, s)) return true;
      for (CellId id : extras)
        if (g.covers(id, s)) return true;
      return false;
    };
    {  // spot-check the fast path against the exact query
      Rng rng(77);
      for (int i = 0; i < 1000; ++i) {
        State s{uniform_real(rng, 0.0, 100.0), uniform_real(rng, 0.0, 30.0),
                uniform_real(rng, 0.0, 30.0)};
        if (covered(s) != g.cell_of(s).has_value()) {
          record(9, "stochastic dropout escape rate", false, "containment fast path diverges");
          return 1;
        }
      }
    }

    const double threshold = 0.1 + 3.0 * std::sqrt(0.1 / 10000.0);
    int good_trials = 0;
    double worst_rate = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      auto mc_model = make_model(rc.model_spec, 1000 + trial);
      Rng rng(500 + trial);
      int escapes = 0;
      for (int i = 0; i < 10000; ++i) {
        auto start = g.sample_centroid(rng);
        Trajectory traj =
            run_scenario(*mc_model, cfg.policy, g.centroid(*start), cfg.sim, rng);
        bool escaped = traj.collided();
        if (!escaped)
          for (const State& s : traj.states)
            if (!covered(s)) {
              escaped = true;
              break;
            }
        escapes += escaped ? 1 : 0;
      }
      double rate = escapes / 10000.0;
      worst_rate = std::max(worst_rate, rate);
      if (rate <= threshold) ++good_trials;
    }
    record(9, "stochastic dropout escape rate within tolerance", good_trials >= 19,
           fmt("%d/20 trials under %.6f, worst rate %.4f (exit: %s, %llu runs)",
               good_trials, threshold, worst_rate, to_string(res.exit_reason),
               static_cast<unsigned long long>(res.total_runs)));
  }

  // --- 10: pruning closure over every quantification above -------------------
  {
    bool ok = true;
    std::string why = "all exploration edges stay inside the surviving set";
    std::size_t checked = 0;
    auto check = [&](const SafeSetResult& r) {
      ++checked;
      if (ok && !closure_holds(r, why)) ok = false;
    };
    check(pb_res);
    for (const auto& [key, runs] : full)
      for (const auto& r : runs.by_seed) check(r);
    for (const auto& [key, runs] : warm)
      for (const auto& r : runs.by_seed) check(r);
    record(10, "pruning closure of the exploration graph", ok,
           fmt("%zu result sets checked; %s", checked, why.c_str()));
  }

  // --- 11: concrete battery ordering and the reactive stack's blind spots ----
  {
    NcapConfig nc = parse_ncap_config(slurp(config_path("ncap_battery.json")));
    auto passes = [&](SubjectVehicleModel& m) {
      auto outs = ncap_battery(m, nc.scenarios, nc.repeats, nc.sim, nc.seed);
      int n = 0;
      for (const auto& o : outs) n += o.passed ? 1 : 0;
      return n;
    };
    auto m = make_idm_m(), n = make_idm_n(), h = make_idm_h();
    int pm = passes(*m), pn = passes(*n), ph = passes(*h);

    RunConfig acc_rc = parse_run_config(slurp(config_path("acc_aeb.json")));
    auto acc = make_model(acc_rc.model_spec, 0);
    auto acc_outs = ncap_battery(*acc, nc.scenarios, nc.repeats, nc.sim, nc.seed);
    int fail_ccrm = 0, fail_ccrb = 0;
    for (const auto& o : acc_outs) {
      if (o.passed) continue;
      if (nc.scenarios[o.scenario].kind == NcapKind::kCcrm) ++fail_ccrm;
      if (nc.scenarios[o.scenario].kind == NcapKind::kCcrb) ++fail_ccrb;
    }
    bool ok = ph >= pn && pn >= pm && fail_ccrm >= 1 && fail_ccrb >= 1;
    record(11, "battery pass ordering and reactive-stack failures", ok,
           fmt("passes m=%d n=%d h=%d of 48; reactive stack fails %d moving, %d braking",
               pm, pn, ph, fail_ccrm, fail_ccrb));
  }

  if (g_failures == 0) {
    std::printf("acceptance: all 11 criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criteria FAILED\n", g_failures);
  return 1;
}
