#pragma once

#include <stdexcept>
#include <vector>

#include "safeset/state.hpp"

namespace safeset {

// LIFO stack of raw states queued for revisiting. Duplicates are meaningful
// (each entry is one pending visit). Popping when empty is a caller bug: the
// exploration loop must check empty() and fall back to uniform sampling.
class ReplayBuffer {
 public:
  void push(const State& s) { items_.push_back(s); }

  State pop() {
    if (items_.empty()) throw std::logic_error("ReplayBuffer::pop on empty buffer");
    State s = items_.back();
    items_.pop_back();
    return s;
  }

  bool empty() const { return items_.empty(); }
  std::size_t size() const { return items_.size(); }
  void clear() { items_.clear(); }
  const std::vector<State>& items() const { return items_; }

 private:
  std::vector<State> items_;
};

}  // namespace safeset
