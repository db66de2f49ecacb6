#pragma once

#include <cstdint>
#include <vector>

#include "ocd/dynamics.hpp"

namespace ocd {

/// One executed (state, control) pair of a closed-loop rollout.
struct RolloutStep {
  WorldState state;
  Control control;
};

/// Executed MPC trajectory. Invariant: per_step_true_cost has one entry per
/// step and cumulative_true_cost is their sum.
struct Rollout {
  std::vector<RolloutStep> steps;
  std::vector<double> per_step_true_cost;
  double cumulative_true_cost = 0.0;
  /// State reached after executing the last control.
  WorldState final_state;
  std::uint64_t seed = 0;
};

}  // namespace ocd
