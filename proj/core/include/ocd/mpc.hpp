#pragma once

#include <cstdint>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ocd/costs.hpp"
#include "ocd/rollout.hpp"
#include "ocd/scenarios.hpp"

namespace ocd {

/// A rollout hit a non-finite state. Carries the steps logged so far.
class RolloutDiverged : public std::runtime_error {
 public:
  RolloutDiverged(const std::string& what, Rollout partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const Rollout& partial() const noexcept { return partial_; }

 private:
  Rollout partial_;
};

struct RolloutOptions {
  /// Start state; the scenario's nominal start when unset.
  const WorldState* start = nullptr;
  /// Which of scenario.true_humans actually drives.
  std::size_t true_human = 0;
};

/// Closed-loop MPC: at each of the scenario's T steps plan under
/// `theta_plan`, execute the first control through the true dynamics, update
/// the belief from the human's observed control, and log the true cost.
/// `seed` drives the wind; everything else is deterministic.
Rollout mpc_rollout(const CostWeights& theta_plan, const CostWeights& theta_true,
                    const Scenario& scenario, std::uint64_t seed,
                    const RolloutOptions& options = {});

/// Mean cumulative true cost over every possible true human from `start`.
double expected_rollout_cost(const CostWeights& theta_plan, const CostWeights& theta_true,
                             const Scenario& scenario, const WorldState& start,
                             std::uint64_t seed);

nlohmann::json rollout_to_json(const Rollout& r);

}  // namespace ocd
