#include "ocd/planner.hpp"

#include <cmath>
#include <utility>

#include "ocd/errors.hpp"

namespace ocd {

std::vector<NamedInit> default_initializations() {
  return {{"straight", 0.0, 0.0}, {"right", 0.2, 0.0}, {"left", -0.2, 0.0}};
}

void PlannerConfig::validate() const {
  if (horizon < 1) throw ConfigError("planner: horizon must be >= 1");
  if (gd_steps < 0) throw ConfigError("planner: gd_steps must be >= 0");
  if (!(step_size > 0.0)) throw ConfigError("planner: step size must be positive");
  if (initializations.empty()) throw ConfigError("planner: at least one initialization");
}

PlanProblem::PlanProblem(CostWeights theta, const WorldState& w, const Belief& belief,
                         int horizon, const RoadGeometry& road, double v_target,
                         const DynamicsParams& dynamics, TerminalCost terminal)
    : theta_(theta),
      robot0_(w.robot),
      t0_(w.t),
      horizon_(horizon),
      road_(road),
      v_target_(v_target),
      dyn_(dynamics),
      terminal_(std::move(terminal)) {
  if (horizon < 1) throw ArityError("plan: horizon must be >= 1");
  if (belief.probs.size() != belief.hypotheses.size()) {
    throw ArityError("plan: belief probabilities do not match hypotheses");
  }
  for (std::size_t k = 0; k < belief.hypotheses.size(); ++k) {
    if (belief.probs[k] <= 0.0) continue;
    Branch br;
    br.prob = belief.probs[k];
    br.humans.reserve(static_cast<std::size_t>(horizon) + 1);
    WorldState x = w;
    for (int i = 0; i < horizon; ++i) {
      br.humans.push_back(x.humans);
      const std::vector<Control> u = human_controls(belief.hypotheses[k], x, road, dynamics);
      x = step_world_planning(x, Control{}, u, dynamics);
    }
    br.humans.push_back(x.humans);
    branches_.push_back(std::move(br));
  }
}

void PlanProblem::check(const ControlSequence& seq) const {
  if (seq.size() != static_cast<std::size_t>(horizon_)) {
    throw ArityError("plan: control sequence length must equal the horizon");
  }
}

double PlanProblem::value(const ControlSequence& seq) const {
  check(seq);
  double total = 0.0;
  for (const Branch& br : branches_) {
    CarState r = robot0_;
    double sum = 0.0;
    for (int i = 0; i < horizon_; ++i) {
      const auto& humans = br.humans[static_cast<std::size_t>(i)];
      const FeatureVector f = robot_features(r, humans, road_, v_target_, nullptr);
      for (std::size_t j = 0; j < kNumFeatures; ++j) sum += theta_.w[j] * f[j];
      r = step_car(r, seq[static_cast<std::size_t>(i)], dyn_.dt, dyn_.friction, dyn_.clamp_speed);
    }
    if (terminal_) {
      std::array<double, 4> unused{};
      WorldState last{r, br.humans.back(), t0_ + horizon_};
      sum += terminal_(last, unused);
    }
    total += br.prob * sum;
  }
  return total;
}

double PlanProblem::value_and_gradient(const ControlSequence& seq, PlanGradient& grad) const {
  check(seq);
  const auto k = static_cast<std::size_t>(horizon_);
  grad.assign(k, {0.0, 0.0});
  std::vector<CarState> robot(k + 1);
  std::vector<std::array<double, 4>> dcost(k);
  double total = 0.0;
  for (const Branch& br : branches_) {
    robot[0] = robot0_;
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      FeatureJacobian jac;
      const FeatureVector f = robot_features(robot[i], br.humans[i], road_, v_target_, &jac);
      std::array<double, 4> g{};
      for (std::size_t j = 0; j < kNumFeatures; ++j) {
        sum += theta_.w[j] * f[j];
        for (std::size_t s = 0; s < 4; ++s) g[s] += theta_.w[j] * jac[j][s];
      }
      dcost[i] = g;
      robot[i + 1] = step_car(robot[i], seq[i], dyn_.dt, dyn_.friction, dyn_.clamp_speed);
    }
    std::array<double, 4> adj{};
    if (terminal_) {
      WorldState last{robot[k], br.humans.back(), t0_ + horizon_};
      sum += terminal_(last, adj);
    }
    // adj holds d(sum)/d(robot[i + 1]) on entry to iteration i.
    for (std::size_t i = k; i-- > 0;) {
      const CarJacobian J =
          step_car_jacobian(robot[i], seq[i], dyn_.dt, dyn_.friction, dyn_.clamp_speed);
      for (std::size_t c = 0; c < 2; ++c) {
        double g = 0.0;
        for (std::size_t s = 0; s < 4; ++s) g += J.wrt_control[s][c] * adj[s];
        grad[i][c] += br.prob * g;
      }
      std::array<double, 4> next = dcost[i];
      for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t s = 0; s < 4; ++s) next[a] += J.wrt_state[s][a] * adj[s];
      }
      adj = next;
    }
    total += br.prob * sum;
  }
  return total;
}

double plan_objective(const CostWeights& theta, const WorldState& w, const Belief& b,
                      const ControlSequence& seq, const RoadGeometry& road, double v_target,
                      const DynamicsParams& dynamics) {
  const PlanProblem p(theta, w, b, static_cast<int>(seq.size()), road, v_target, dynamics);
  return p.value(seq);
}

PlanGradient plan_gradient(const CostWeights& theta, const WorldState& w, const Belief& b,
                           const ControlSequence& seq, const RoadGeometry& road, double v_target,
                           const DynamicsParams& dynamics) {
  const PlanProblem p(theta, w, b, static_cast<int>(seq.size()), road, v_target, dynamics);
  PlanGradient g;
  p.value_and_gradient(seq, g);
  return g;
}

ControlSequence constant_sequence(const NamedInit& init, int horizon) {
  return ControlSequence(static_cast<std::size_t>(horizon), Control(init.steer, init.accel));
}

namespace {

void descend(const PlanProblem& problem, ControlSequence seq, int steps, double alpha,
             std::size_t seed_index, PlanResult& best, bool& have_best) {
  PlanGradient g;
  for (int it = 0;; ++it) {
    const double f = it < steps ? problem.value_and_gradient(seq, g) : problem.value(seq);
    if (!have_best || f < best.objective) {
      best.controls = seq;
      best.objective = f;
      best.seed_index = seed_index;
      have_best = true;
    }
    if (it >= steps) break;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      seq[i] = Control(seq[i].steer() - alpha * g[i][0], seq[i].accel() - alpha * g[i][1]);
    }
  }
}

}  // namespace

PlanResult optimize_plan(const PlanProblem& problem, const PlannerConfig& cfg,
                         const ControlSequence* warm_start) {
  cfg.validate();
  if (problem.horizon() != cfg.horizon) {
    throw ArityError("optimize_plan: problem horizon differs from the config horizon");
  }
  PlanResult best;
  bool have_best = false;
  std::size_t index = 0;
  for (const NamedInit& init : cfg.initializations) {
    descend(problem, constant_sequence(init, cfg.horizon), cfg.gd_steps, cfg.step_size, index++,
            best, have_best);
  }
  if (warm_start != nullptr) {
    descend(problem, *warm_start, cfg.gd_steps, cfg.step_size, index, best, have_best);
  }
  return best;
}

PlanResult optimize_plan(const CostWeights& theta, const WorldState& w, const Belief& b,
                         const PlannerConfig& cfg, const RoadGeometry& road, double v_target,
                         const DynamicsParams& dynamics) {
  const PlanProblem p(theta, w, b, cfg.horizon, road, v_target, dynamics, cfg.terminal_cost);
  return optimize_plan(p, cfg, nullptr);
}

}  // namespace ocd
