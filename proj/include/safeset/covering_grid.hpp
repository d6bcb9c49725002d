#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "safeset/rng.hpp"
#include "safeset/state.hpp"

namespace safeset {

// Box cover of a StateBounds region: a regular lattice of centroids with
// spacing 2*delta_i per dimension (each cell covers the L-inf box of
// half-width delta_i around its centroid, clipped to bounds), plus optional
// exact-state expansion centroids appended during exploration.
//
// Cell ids are stable: removal only deactivates. Lattice cells are created in
// row-major (d, v0, v1) order, so "lowest index" tie-breaks coincide with
// lexicographic order on the lattice coordinates.
class CoveringGrid {
 public:
  using CellId = std::uint32_t;

  struct Cell {
    State centroid;
    std::array<int, 3> lattice;  // containing lattice block (snapped for extras)
    bool active = true;
    bool extra = false;  // expansion centroid (exact visited state)
  };

  CoveringGrid(StateBounds bounds, Delta delta)
      : bounds_(bounds), delta_(delta) {
    bounds_.validate();
    for (int i = 0; i < kStateDims; ++i) {
      if (!(delta_[i] > 0.0))
        throw std::invalid_argument("CoveringGrid: delta must be > 0 componentwise");
      axis_centroids_[i] = make_axis_centroids(i);
      dims_[i] = static_cast<int>(axis_centroids_[i].size());
    }
    lattice_count_ = static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
    cells_.reserve(lattice_count_);
    for (int i = 0; i < dims_[0]; ++i)
      for (int j = 0; j < dims_[1]; ++j)
        for (int k = 0; k < dims_[2]; ++k) {
          Cell c;
          c.centroid = State{axis_centroids_[0][i], axis_centroids_[1][j],
                             axis_centroids_[2][k]};
          c.lattice = {i, j, k};
          cells_.push_back(c);
        }
    active_ids_.resize(cells_.size());
    for (std::size_t n = 0; n < cells_.size(); ++n)
      active_ids_[n] = static_cast<CellId>(n);
  }

  const StateBounds& bounds() const { return bounds_; }
  const Delta& delta() const { return delta_; }
  std::array<int, 3> lattice_dims() const { return dims_; }
  std::size_t lattice_cell_count() const { return lattice_count_; }
  std::size_t cell_count() const { return cells_.size(); }
  std::size_t active_count() const { return active_ids_.size(); }
  bool empty() const { return active_ids_.empty(); }

  const Cell& cell(CellId id) const { return cells_.at(id); }
  const State& centroid(CellId id) const { return cells_.at(id).centroid; }
  bool is_active(CellId id) const { return id < cells_.size() && cells_[id].active; }
  bool is_extra(CellId id) const { return cells_.at(id).extra; }

  // Active ids in ascending order (scan order defines the lowest-index tie-break).
  const std::vector<CellId>& active_ids() const { return active_ids_; }

  void set_nearest_normalized(bool on) { normalized_nearest_ = on; }
  bool nearest_normalized() const { return normalized_nearest_; }

  // Geometric membership of s in the (bounds-clipped) neighborhood of id.
  bool covers(CellId id, const State& s) const {
    const State& c = cells_.at(id).centroid;
    for (int i = 0; i < kStateDims; ++i)
      if (std::abs(state_axis(s, i) - state_axis(c, i)) > delta_[i]) return false;
    return true;
  }

  // Active cell whose neighborhood contains s (clipped into bounds first);
  // ties: nearest centroid, then lowest id.
  std::optional<CellId> cell_of(const State& s) const {
    const State q = bounds_.clip(s);
    std::optional<CellId> best;
    double best_d2 = 0.0;
    for (CellId id : active_ids_) {
      if (!covers(id, q)) continue;
      double d2 = dist2(q, cells_[id].centroid, /*normalized=*/false);
      if (!best || d2 < best_d2) {
        best = id;
        best_d2 = d2;
      }
    }
    return best;
  }

  // Active cell minimizing l2 distance to s in raw units (or delta-normalized
  // units when enabled); ties by lowest id. Empty grid -> nullopt (exhaustion).
  std::optional<CellId> nearest_centroid(const State& s) const {
    std::optional<CellId> best;
    double best_d2 = 0.0;
    for (CellId id : active_ids_) {
      double d2 = dist2(s, cells_[id].centroid, normalized_nearest_);
      if (!best || d2 < best_d2) {
        best = id;
        best_d2 = d2;
      }
    }
    return best;
  }

  // Uniform draw over active cells; nullopt iff empty.
  std::optional<CellId> sample_centroid(Rng& rng) const {
    if (active_ids_.empty()) return std::nullopt;
    return active_ids_[uniform_index(rng, active_ids_.size())];
  }

  void remove(CellId id) {
    if (id >= cells_.size() || !cells_[id].active) return;
    cells_[id].active = false;
    auto it = std::lower_bound(active_ids_.begin(), active_ids_.end(), id);
    if (it != active_ids_.end() && *it == id) active_ids_.erase(it);
  }

  // Expansion: adds an exact visited state as a new active centroid.
  CellId add_centroid(const State& s) {
    if (!bounds_.contains(s))
      throw std::invalid_argument("add_centroid: state outside bounds");
    Cell c;
    c.centroid = s;
    c.lattice = snap_to_lattice(s);
    c.extra = true;
    cells_.push_back(c);
    CellId id = static_cast<CellId>(cells_.size() - 1);
    active_ids_.push_back(id);  // new ids are always the largest: order kept
    return id;
  }

  // Containing lattice block per dimension (used to compare expansion
  // centroids against the lattice in set analyses).
  std::array<int, 3> snap_to_lattice(const State& s) const {
    std::array<int, 3> out;
    for (int i = 0; i < kStateDims; ++i) {
      double t = (state_axis(s, i) - state_axis(bounds_.lower, i)) / (2.0 * delta_[i]);
      int idx = static_cast<int>(std::floor(t));
      out[i] = std::clamp(idx, 0, dims_[i] - 1);
    }
    return out;
  }

  std::size_t active_lattice_count() const {
    std::size_t n = 0;
    for (CellId id : active_ids_)
      if (!cells_[id].extra) ++n;
    return n;
  }

  std::size_t removed_lattice_count() const {
    return lattice_count_ - active_lattice_count();
  }

  // Structural equality: same geometry, same active set, same extras in order.
  bool operator==(const CoveringGrid& o) const {
    if (!(bounds_ == o.bounds_) || delta_ != o.delta_ || dims_ != o.dims_)
      return false;
    if (cells_.size() != o.cells_.size()) return false;
    for (std::size_t n = 0; n < cells_.size(); ++n) {
      if (cells_[n].active != o.cells_[n].active) return false;
      if (!(cells_[n].centroid == o.cells_[n].centroid)) return false;
      if (cells_[n].extra != o.cells_[n].extra) return false;
    }
    return true;
  }

 private:
  static double sq(double x) { return x * x; }

  double dist2(const State& a, const State& b, bool normalized) const {
    double acc = 0.0;
    for (int i = 0; i < kStateDims; ++i) {
      double t = state_axis(a, i) - state_axis(b, i);
      if (normalized) t /= delta_[i];
      acc += sq(t);
    }
    return acc;
  }

  std::vector<double> make_axis_centroids(int i) const {
    const double lo = state_axis(bounds_.lower, i);
    const double hi = state_axis(bounds_.upper, i);
    const double range = hi - lo;
    const double span = 2.0 * delta_[i];
    int n = static_cast<int>(std::ceil(range / span));
    if (n < 1) n = 1;
    std::vector<double> out;
    out.reserve(n);
    if (n == 1) {
      // Degenerate cover: one cell centered on the range (2*delta >= range).
      out.push_back(lo + range / 2.0);
      return out;
    }
    for (int k = 0; k < n; ++k) {
      double c = lo + delta_[i] + span * k;
      if (k == n - 1 && c > hi) c = hi;  // clip the last centroid into bounds
      out.push_back(c);
    }
    return out;
  }

  StateBounds bounds_;
  Delta delta_;
  std::array<std::vector<double>, 3> axis_centroids_;
  std::array<int, 3> dims_{};
  std::size_t lattice_count_ = 0;
  std::vector<Cell> cells_;
  std::vector<CellId> active_ids_;  // ascending
  bool normalized_nearest_ = false;
};

}  // namespace safeset
