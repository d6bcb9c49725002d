#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

namespace safeset {

// Directed graph over cell ids recording observed transitions. Used both for
// the exploration graph (whose reverse reachability drives pruning) and for
// unsafe-transition bookkeeping. Ordered containers keep every listing
// deterministic regardless of insertion order.
class TransitionGraph {
 public:
  using Vertex = std::uint32_t;

  void add_edge(Vertex from, Vertex to) {
    if (succ_[from].insert(to).second) {
      pred_[to].insert(from);
      ++edge_count_;
    }
  }

  bool has_edge(Vertex from, Vertex to) const {
    auto it = succ_.find(from);
    return it != succ_.end() && it->second.count(to) > 0;
  }

  std::size_t edge_count() const { return edge_count_; }

  // All vertices with a directed path to v, v itself included. Reverse DFS;
  // cycles are fine because the visited set grows monotonically.
  std::vector<Vertex> ancestors(Vertex v) const {
    std::set<Vertex> seen{v};
    std::vector<Vertex> stack{v};
    while (!stack.empty()) {
      Vertex cur = stack.back();
      stack.pop_back();
      auto it = pred_.find(cur);
      if (it == pred_.end()) continue;
      for (Vertex p : it->second)
        if (seen.insert(p).second) stack.push_back(p);
    }
    return {seen.begin(), seen.end()};  // ascending
  }

  // Edge list sorted by (from, to).
  std::vector<std::pair<Vertex, Vertex>> edges() const {
    std::vector<std::pair<Vertex, Vertex>> out;
    out.reserve(edge_count_);
    for (const auto& [from, tos] : succ_)
      for (Vertex to : tos) out.emplace_back(from, to);
    return out;
  }

 private:
  std::map<Vertex, std::set<Vertex>> succ_;
  std::map<Vertex, std::set<Vertex>> pred_;
  std::size_t edge_count_ = 0;
};

}  // namespace safeset
