#include "ocd/mpc.hpp"

#include <string>

#include "ocd/errors.hpp"
#include "ocd/planner.hpp"

namespace ocd {

Rollout mpc_rollout(const CostWeights& theta_plan, const CostWeights& theta_true,
                    const Scenario& scenario, std::uint64_t seed, const RolloutOptions& options) {
  const PlannerConfig& cfg = scenario.planner;
  if (options.true_human >= scenario.true_humans.size()) {
    throw ArityError("mpc_rollout: true human index out of range");
  }
  const HumanHypothesis& truth = scenario.true_humans[options.true_human];

  Rollout out;
  out.seed = seed;
  out.steps.reserve(static_cast<std::size_t>(scenario.horizon));
  out.per_step_true_cost.reserve(static_cast<std::size_t>(scenario.horizon));

  WorldState w = options.start != nullptr ? *options.start : scenario.nominal_start;
  Belief belief = scenario.belief0;
  Rng wind_rng(derive_seed(seed, "wind"));
  ControlSequence shifted;
  std::vector<double> errors(belief.hypotheses.size());

  try {
    for (int t = 0; t < scenario.horizon; ++t) {
      if (!w.robot.finite()) throw InvalidStateError("non-finite robot state");
      const PlanProblem problem(theta_plan, w, belief, cfg.horizon, scenario.road,
                                scenario.v_target, scenario.dynamics, cfg.terminal_cost);
      const bool warm = cfg.warm_start && !shifted.empty();
      const PlanResult plan = optimize_plan(problem, cfg, warm ? &shifted : nullptr);
      const Control u = plan.controls.front();

      const std::vector<Control> observed =
          human_controls(truth, w, scenario.road, scenario.dynamics);
      for (std::size_t k = 0; k < belief.hypotheses.size(); ++k) {
        const std::vector<Control> predicted =
            human_controls(belief.hypotheses[k], w, scenario.road, scenario.dynamics);
        double e = 0.0;
        for (std::size_t c = 0; c < observed.size(); ++c) {
          const double ds = observed[c].steer() - predicted[c].steer();
          const double da = observed[c].accel() - predicted[c].accel();
          e += ds * ds + da * da;
        }
        errors[k] = e;
      }

      const double c = cost(theta_true, w, u, scenario.road, scenario.v_target);
      out.steps.push_back({w, u});
      out.per_step_true_cost.push_back(c);
      out.cumulative_true_cost += c;

      belief = update_belief_from_errors(belief, errors, scenario.likelihood_sigma).belief;
      w = step_world_true(w, u, observed, scenario.wind, scenario.dynamics, wind_rng);

      shifted.assign(plan.controls.begin() + 1, plan.controls.end());
      shifted.push_back(plan.controls.back());
    }
    if (!w.robot.finite()) throw InvalidStateError("non-finite robot state");
  } catch (const InvalidStateError& e) {
    out.final_state = w;
    throw RolloutDiverged(std::string("rollout diverged at t=") + std::to_string(w.t) + ": " +
                              e.what(),
                          std::move(out));
  }
  out.final_state = w;
  return out;
}

double expected_rollout_cost(const CostWeights& theta_plan, const CostWeights& theta_true,
                             const Scenario& scenario, const WorldState& start,
                             std::uint64_t seed) {
  double total = 0.0;
  for (std::size_t h = 0; h < scenario.true_humans.size(); ++h) {
    RolloutOptions opt;
    opt.start = &start;
    opt.true_human = h;
    total += mpc_rollout(theta_plan, theta_true, scenario, seed, opt).cumulative_true_cost;
  }
  return total / static_cast<double>(scenario.true_humans.size());
}

namespace {

nlohmann::json car_json(const CarState& c) {
  return {{"lat", c.lat}, {"lon", c.lon}, {"heading", c.heading}, {"speed", c.speed}};
}

nlohmann::json world_json(const WorldState& w) {
  nlohmann::json humans = nlohmann::json::array();
  for (const CarState& h : w.humans) humans.push_back(car_json(h));
  return {{"t", w.t}, {"robot", car_json(w.robot)}, {"humans", humans}};
}

}  // namespace

nlohmann::json rollout_to_json(const Rollout& r) {
  nlohmann::json states = nlohmann::json::array();
  nlohmann::json controls = nlohmann::json::array();
  for (const RolloutStep& s : r.steps) {
    states.push_back(world_json(s.state));
    controls.push_back({{"steer", s.control.steer()}, {"accel", s.control.accel()}});
  }
  return {{"schema_version", 1},
          {"seed", r.seed},
          {"states", states},
          {"controls", controls},
          {"per_step_true_cost", r.per_step_true_cost},
          {"cumulative_true_cost", r.cumulative_true_cost},
          {"final_state", world_json(r.final_state)}};
}

}  // namespace ocd
