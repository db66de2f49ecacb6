#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "ocd/costs.hpp"
#include "ocd/dynamics.hpp"
#include "ocd/human.hpp"

namespace ocd {

/// K planned robot controls, all within the control bounds.
using ControlSequence = std::vector<Control>;

/// d(objective)/d(steer, accel) for each planned control.
using PlanGradient = std::vector<std::array<double, 2>>;

/// Optional cost on the state reached after the last planned control. Must
/// write d(cost)/d(robot lat, lon, heading, speed) into `grad`.
using TerminalCost = std::function<double(const WorldState& w, std::array<double, 4>& grad)>;

/// A constant-control seed sequence for gradient descent.
struct NamedInit {
  std::string name;
  double steer = 0.0;
  double accel = 0.0;
  friend bool operator==(const NamedInit&, const NamedInit&) = default;
};

/// straight (0, 0), right (+0.2, 0), left (-0.2, 0).
std::vector<NamedInit> default_initializations();

struct PlannerConfig {
  int horizon = 5;
  int gd_steps = 100;
  double step_size = 0.05;
  std::vector<NamedInit> initializations = default_initializations();
  /// Add the previous plan, shifted by one step, as an extra seed.
  bool warm_start = true;
  TerminalCost terminal_cost;

  /// Throws ConfigError on horizon < 1, gd_steps < 0, step_size <= 0 or no
  /// initializations.
  void validate() const;
};

/// The belief-weighted K-step objective at one world state. Human
/// predictions are computed once on construction, since the humans do not
/// react to the robot; evaluation then only rolls the robot forward.
class PlanProblem {
 public:
  PlanProblem(CostWeights theta, const WorldState& w, const Belief& belief, int horizon,
              const RoadGeometry& road, double v_target, const DynamicsParams& dynamics,
              TerminalCost terminal = {});

  int horizon() const noexcept { return horizon_; }

  double value(const ControlSequence& seq) const;

  /// Objective and its exact gradient by reverse accumulation through the
  /// planning dynamics.
  double value_and_gradient(const ControlSequence& seq, PlanGradient& grad) const;

 private:
  struct Branch {
    double prob;
    /// Human cars at planning steps 0..K.
    std::vector<std::vector<CarState>> humans;
  };

  void check(const ControlSequence& seq) const;

  CostWeights theta_;
  CarState robot0_;
  int t0_;
  int horizon_;
  RoadGeometry road_;
  double v_target_;
  DynamicsParams dyn_;
  TerminalCost terminal_;
  std::vector<Branch> branches_;
};

double plan_objective(const CostWeights& theta, const WorldState& w, const Belief& b,
                      const ControlSequence& seq, const RoadGeometry& road, double v_target,
                      const DynamicsParams& dynamics);

PlanGradient plan_gradient(const CostWeights& theta, const WorldState& w, const Belief& b,
                           const ControlSequence& seq, const RoadGeometry& road, double v_target,
                           const DynamicsParams& dynamics);

struct PlanResult {
  ControlSequence controls;
  double objective = 0.0;
  /// Index into the seeds that were tried (configured initializations, then
  /// the warm start if one was given).
  std::size_t seed_index = 0;
};

ControlSequence constant_sequence(const NamedInit& init, int horizon);

/// Fixed-step projected gradient descent from every seed, returning the
/// lowest-objective iterate seen across all of them. Ties keep the earliest.
PlanResult optimize_plan(const PlanProblem& problem, const PlannerConfig& cfg,
                         const ControlSequence* warm_start = nullptr);

PlanResult optimize_plan(const CostWeights& theta, const WorldState& w, const Belief& b,
                         const PlannerConfig& cfg, const RoadGeometry& road, double v_target,
                         const DynamicsParams& dynamics);

}  // namespace ocd
