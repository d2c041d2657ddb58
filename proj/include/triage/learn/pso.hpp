#pragma once

#include <cstdint>
#include <vector>

#include "triage/learn/mlp.hpp"

namespace triage::learn {

struct PsoParams {
  int swarm = 30;
  int iterations = 200;
  double inertia = 0.7;
  double c1 = 1.5;
  double c2 = 1.5;
  double velocity_clamp = 0.5;
  double init_range = 0.5;
  std::uint64_t seed = 0;

  // Throws Error(InvalidParams).
  void validate() const;
};

struct PsoResult {
  Mlp mlp;
  // Entry 0 is the best initial particle, then one entry per iteration.
  std::vector<double> gbest_curve;
};

// Global-best PSO over the flattened MLP parameters; fitness is mean cross-entropy.
PsoResult train_pso(const Layout& layout, const Dataset& data, const PsoParams& params);

}  // namespace triage::learn
