#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "ocd/costs.hpp"
#include "ocd/dynamics.hpp"
#include "ocd/human.hpp"
#include "ocd/planner.hpp"
#include "ocd/random.hpp"

namespace ocd {

inline constexpr int kScenarioSchemaVersion = 1;

/// Everything needed to run MPC rollouts for one driving task: road, task
/// horizon, planner, true cost, start distribution, and human behavior.
struct Scenario {
  int id = 1;
  RoadGeometry road;
  int horizon = 15;  ///< task horizon T
  PlannerConfig planner;
  DynamicsParams dynamics;
  CostWeights theta_true;
  double v_target = 1.0;
  WorldState nominal_start;
  /// Per-field standard deviation of the robot's start (heading usually 0).
  CarState start_std;
  /// Possible true human behaviors. The task cost is an expectation over
  /// them, so a rollout is run for each one.
  std::vector<HumanHypothesis> true_humans;
  /// Robot's belief at t = 0.
  Belief belief0;
  WindParams wind;
  double likelihood_sigma = 0.05;

  /// Throws ConfigError if any invariant is violated.
  void validate() const;
};

/// Builds scenario 1 (short horizon), 2 (local optimum) or 3 (replanning).
/// Throws ConfigError for any other id.
Scenario build_scenario(int id, bool wind_enabled = false);

/// Default lateral wind for the mismatch variants.
WindParams default_wind();

/// Gaussian perturbation of the robot's nominal start. Speed is clamped at
/// zero and lateral position to the drivable surface.
WorldState sample_initial_state(const Scenario& s, Rng& rng);

nlohmann::json to_json(const Scenario& s);
/// Throws ConfigError on a missing field, unknown hypothesis kind, or a
/// schema_version this build does not understand.
Scenario scenario_from_json(const nlohmann::json& j);

nlohmann::json to_json(const HumanHypothesis& h);
HumanHypothesis hypothesis_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CostWeights& w);
/// Accepts either {"weights": [...]} or a bare 7-element array. Values are
/// used as given; callers normalize.
std::array<double, kNumFeatures> raw_weights_from_json(const nlohmann::json& j);

}  // namespace ocd
