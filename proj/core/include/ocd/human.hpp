#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ocd/costs.hpp"
#include "ocd/dynamics.hpp"

namespace ocd {

/// Drive straight, holding `speed`.
struct FixedSpeed {
  double speed = 0.0;
  friend bool operator==(const FixedSpeed&, const FixedSpeed&) = default;
};

/// Cruise straight until `reveal_step`, then steer into `target_lane` and hold
/// it. Steering is a saturated heading-tracking law whose magnitude never
/// exceeds `merge_steer`.
struct MergeAtReveal {
  int target_lane = 0;
  int reveal_step = 0;
  double merge_steer = 0.5;
  double cruise_speed = 0.0;
  friend bool operator==(const MergeAtReveal&, const MergeAtReveal&) = default;
};

/// One hypothesis about how the human cars drive. Every human car in the
/// world follows the same hypothesis.
using HumanHypothesis = std::variant<FixedSpeed, MergeAtReveal>;

/// Throws ConfigError on negative speeds or an out-of-range lane.
void validate(const HumanHypothesis& h);

std::string describe(const HumanHypothesis& h);

/// Lateral distance from the target lane center below which a merge is done.
inline constexpr double kMergeTolerance = 0.02;

/// Control of human car `car` at timestep t under hypothesis h.
Control human_control(const HumanHypothesis& h, const WorldState& w, int t,
                      const RoadGeometry& road, const DynamicsParams& params,
                      std::size_t car = 0);

/// Controls of every human car at state w (indexed by car).
std::vector<Control> human_controls(const HumanHypothesis& h, const WorldState& w,
                                    const RoadGeometry& road, const DynamicsParams& params);

/// Predicted controls of every human over the next `horizon` steps,
/// indexed [step][car], simulated through the planning dynamics. Humans do
/// not react to the robot, so the robot is held at zero control.
std::vector<std::vector<Control>> predict_human_trajectory(const HumanHypothesis& h,
                                                           const WorldState& w, int horizon,
                                                           const RoadGeometry& road,
                                                           const DynamicsParams& params);

struct Belief {
  std::vector<HumanHypothesis> hypotheses;
  std::vector<double> probs;

  static Belief certain(HumanHypothesis h);
  static Belief uniform(std::vector<HumanHypothesis> hs);

  /// Throws ConfigError unless probs match hypotheses, lie in [0, 1] and sum
  /// to 1 within 1e-9.
  void validate() const;
  friend bool operator==(const Belief&, const Belief&) = default;
};

struct BeliefUpdate {
  Belief belief;
  /// Every hypothesis had zero posterior mass; belief was reset to uniform.
  bool degenerate = false;
};

/// Bayes update with an isotropic Gaussian likelihood on control error,
/// computed in log space so a zero prior stays absorbing.
BeliefUpdate update_belief(const Belief& b, const Control& observed,
                           std::span<const Control> predicted_per_hypothesis,
                           double likelihood_sigma);

/// Same update with one squared control error per hypothesis, summed over
/// however many human cars are observed.
BeliefUpdate update_belief_from_errors(const Belief& b, std::span<const double> squared_errors,
                                       double likelihood_sigma);

}  // namespace ocd
