#include "ocd/human.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ocd/errors.hpp"

namespace ocd {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

// Speed hold: cancel friction and close the speed gap in one step.
double hold_speed_accel(const CarState& car, double target, const DynamicsParams& p) {
  return p.friction * car.speed + (target - car.speed) / p.dt;
}

// Heading-tracking gains of the merge controller.
constexpr double kLateralGain = 4.0;
constexpr double kMaxMergeHeading = 0.3;
constexpr double kHeadingGain = 10.0;

}  // namespace

void validate(const HumanHypothesis& h) {
  std::visit(Overloaded{
                 [](const FixedSpeed& f) {
                   if (!(f.speed >= 0.0)) throw ConfigError("FixedSpeed: speed must be >= 0");
                 },
                 [](const MergeAtReveal& m) {
                   if (!(m.cruise_speed >= 0.0)) {
                     throw ConfigError("MergeAtReveal: cruise speed must be >= 0");
                   }
                   if (m.target_lane < 0 || m.target_lane >= static_cast<int>(kNumLanes)) {
                     throw ConfigError("MergeAtReveal: target lane must be 0, 1 or 2");
                   }
                   if (m.reveal_step < 0) throw ConfigError("MergeAtReveal: negative reveal step");
                 },
             },
             h);
}

std::string describe(const HumanHypothesis& h) {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const FixedSpeed& f) { os << "fixed_speed(" << f.speed << ")"; },
                 [&](const MergeAtReveal& m) {
                   os << "merge(lane=" << m.target_lane << ", reveal=" << m.reveal_step << ")";
                 },
             },
             h);
  return os.str();
}

Control human_control(const HumanHypothesis& h, const WorldState& w, int t,
                      const RoadGeometry& road, const DynamicsParams& params, std::size_t car) {
  const CarState& c = w.humans.at(car);
  return std::visit(
      Overloaded{
          [&](const FixedSpeed& f) { return Control(0.0, hold_speed_accel(c, f.speed, params)); },
          [&](const MergeAtReveal& m) {
            const double accel = hold_speed_accel(c, m.cruise_speed, params);
            if (t < m.reveal_step) return Control(0.0, accel);
            const double err = road.lane_centers[static_cast<std::size_t>(m.target_lane)] - c.lat;
            if (std::abs(err) < kMergeTolerance && std::abs(c.heading) < kMergeTolerance) {
              return Control(0.0, accel);
            }
            const double want =
                std::clamp(kLateralGain * err, -kMaxMergeHeading, kMaxMergeHeading);
            const double steer =
                std::clamp(kHeadingGain * (want - c.heading), -m.merge_steer, m.merge_steer);
            return Control(steer, accel);
          },
      },
      h);
}

std::vector<Control> human_controls(const HumanHypothesis& h, const WorldState& w,
                                    const RoadGeometry& road, const DynamicsParams& params) {
  std::vector<Control> out;
  out.reserve(w.humans.size());
  for (std::size_t i = 0; i < w.humans.size(); ++i) {
    out.push_back(human_control(h, w, w.t, road, params, i));
  }
  return out;
}

std::vector<std::vector<Control>> predict_human_trajectory(const HumanHypothesis& h,
                                                           const WorldState& w, int horizon,
                                                           const RoadGeometry& road,
                                                           const DynamicsParams& params) {
  if (horizon < 1) throw ArityError("predict_human_trajectory: horizon must be >= 1");
  std::vector<std::vector<Control>> out;
  out.reserve(static_cast<std::size_t>(horizon));
  WorldState x = w;
  for (int k = 0; k < horizon; ++k) {
    out.push_back(human_controls(h, x, road, params));
    if (k + 1 < horizon) x = step_world_planning(x, Control{}, out.back(), params);
  }
  return out;
}

Belief Belief::certain(HumanHypothesis h) {
  return Belief{{std::move(h)}, {1.0}};
}

Belief Belief::uniform(std::vector<HumanHypothesis> hs) {
  const double p = hs.empty() ? 0.0 : 1.0 / static_cast<double>(hs.size());
  std::vector<double> probs(hs.size(), p);
  return Belief{std::move(hs), std::move(probs)};
}

void Belief::validate() const {
  if (hypotheses.empty()) throw ConfigError("belief: no hypotheses");
  if (probs.size() != hypotheses.size()) {
    throw ConfigError("belief: probability count does not match hypothesis count");
  }
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("belief: probability outside [0, 1]");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("belief: probabilities do not sum to 1");
  for (const auto& h : hypotheses) ocd::validate(h);
}

BeliefUpdate update_belief_from_errors(const Belief& b, std::span<const double> squared_errors,
                                       double likelihood_sigma) {
  if (squared_errors.size() != b.hypotheses.size()) {
    throw ArityError("update_belief: one prediction per hypothesis required");
  }
  const double inv_two_var = 1.0 / (2.0 * likelihood_sigma * likelihood_sigma);
  const double neg_inf = -std::numeric_limits<double>::infinity();
  std::vector<double> logw(b.probs.size(), neg_inf);
  double top = neg_inf;
  for (std::size_t i = 0; i < logw.size(); ++i) {
    if (b.probs[i] > 0.0 && std::isfinite(squared_errors[i])) {
      logw[i] = std::log(b.probs[i]) - squared_errors[i] * inv_two_var;
      top = std::max(top, logw[i]);
    }
  }
  BeliefUpdate out;
  out.belief.hypotheses = b.hypotheses;
  if (!std::isfinite(top)) {
    out.belief.probs.assign(b.probs.size(), 1.0 / static_cast<double>(b.probs.size()));
    out.degenerate = true;
    return out;
  }
  double total = 0.0;
  out.belief.probs.resize(logw.size());
  for (std::size_t i = 0; i < logw.size(); ++i) {
    out.belief.probs[i] = std::exp(logw[i] - top);
    total += out.belief.probs[i];
  }
  for (double& p : out.belief.probs) p /= total;
  return out;
}

BeliefUpdate update_belief(const Belief& b, const Control& observed,
                           std::span<const Control> predicted_per_hypothesis,
                           double likelihood_sigma) {
  std::vector<double> errors;
  errors.reserve(predicted_per_hypothesis.size());
  for (const Control& p : predicted_per_hypothesis) {
    const double ds = observed.steer() - p.steer();
    const double da = observed.accel() - p.accel();
    errors.push_back(ds * ds + da * da);
  }
  return update_belief_from_errors(b, errors, likelihood_sigma);
}

}  // namespace ocd
