#pragma once

#include <string>

#include "safeset/state.hpp"

namespace safeset {

// Black-box subject-vehicle controller: observed state in, commanded SV
// acceleration out. Instances may hold per-run memory (integrators, previous
// command); reset() restores the fresh-controller state. One instance per
// concurrent run.
class SubjectVehicleModel {
 public:
  virtual ~SubjectVehicleModel() = default;
  // dt is the controller period; memoryful models rate-limit against it.
  virtual double accel(const State& s, double dt) = 0;
  virtual void reset() = 0;
  virtual std::string name() const = 0;
};

}  // namespace safeset
