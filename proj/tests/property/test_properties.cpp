#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ocd/costdesign.hpp"
#include "ocd/costs.hpp"
#include "ocd/dynamics.hpp"
#include "ocd/errors.hpp"
#include "ocd/harness.hpp"
#include "ocd/human.hpp"
#include "ocd/mpc.hpp"
#include "ocd/planner.hpp"
#include "ocd/scenarios.hpp"
#include "support.hpp"

namespace ocd {
namespace {

constexpr int kPoints = 100;
constexpr double kFdStep = 1e-5;
constexpr double kDynamicsTol = 1e-4;
constexpr double kPlanGradTol = 1e-4;
constexpr double kFeatureTol = 1e-3;
// Derivatives below this magnitude are compared in absolute terms.
constexpr double kGradFloor = 1e-6;

const RoadGeometry kRoad;

double grad_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({kGradFloor, std::abs(analytic), std::abs(numeric)});
}

std::array<double, 4> as_array(const CarState& s) { return {s.lat, s.lon, s.heading, s.speed}; }

CarState from_array(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }

// --- dynamics ---------------------------------------------------------------

TEST(DynamicsProperty, JacobianMatchesFiniteDifferences) {
  Rng rng(1001);
  const double dt = 0.1;
  const double fr = 0.1;
  for (int p = 0; p < kPoints; ++p) {
    const CarState s = test::random_car(rng);
    const Control u = test::random_control(rng);
    const CarJacobian jac = step_car_jacobian(s, u, dt, fr);
    for (int j = 0; j < 4; ++j) {
      auto hi = as_array(s);
      auto lo = hi;
      hi[j] += kFdStep;
      lo[j] -= kFdStep;
      const auto fh = as_array(step_car(from_array(hi), u, dt, fr));
      const auto fl = as_array(step_car(from_array(lo), u, dt, fr));
      for (int i = 0; i < 4; ++i) {
        const double fd = (fh[i] - fl[i]) / (2 * kFdStep);
        ASSERT_LE(grad_err(jac.wrt_state[i][j], fd), kDynamicsTol) << p << ' ' << i << ' ' << j;
      }
    }
    for (int j = 0; j < 2; ++j) {
      const double d = j == 0 ? kFdStep : 0.0;
      const double a = j == 1 ? kFdStep : 0.0;
      const auto fh = as_array(step_car(s, Control(u.steer() + d, u.accel() + a), dt, fr));
      const auto fl = as_array(step_car(s, Control(u.steer() - d, u.accel() - a), dt, fr));
      for (int i = 0; i < 4; ++i) {
        const double fd = (fh[i] - fl[i]) / (2 * kFdStep);
        ASSERT_LE(grad_err(jac.wrt_control[i][j], fd), kDynamicsTol) << p << ' ' << i << ' ' << j;
      }
    }
  }
}

TEST(DynamicsProperty, SameInputsSameSuccessor) {
  Rng rng(1002);
  const WindParams wind{0.05, 0.02, true};
  for (int p = 0; p < kPoints; ++p) {
    WorldState w;
    w.robot = test::random_car(rng);
    w.humans = {test::random_car(rng)};
    const Control u = test::random_control(rng);
    const std::vector<Control> uh{test::random_control(rng)};
    const auto seed = static_cast<std::uint64_t>(p);
    Rng a(seed);
    Rng b(seed);
    EXPECT_EQ(step_world_true(w, u, uh, wind, {}, a), step_world_true(w, u, uh, wind, {}, b));
  }
}

TEST(DynamicsProperty, SpeedConservedWithoutControlOrFriction) {
  Rng rng(1003);
  for (int p = 0; p < 20; ++p) {
    CarState s = test::random_car(rng);
    const double v = s.speed;
    for (int k = 0; k < 1000; ++k) s = step_car(s, Control{}, 0.1, 0.0);
    EXPECT_EQ(s.speed, v);
  }
}

TEST(DynamicsProperty, ZeroWindEqualsPlanningModel) {
  Rng rng(1004);
  const WindParams calm{0.0, 0.0, true};
  for (int p = 0; p < kPoints; ++p) {
    WorldState w;
    w.robot = test::random_car(rng);
    w.humans = {test::random_car(rng), test::random_car(rng)};
    const Control u = test::random_control(rng);
    const std::vector<Control> uh{test::random_control(rng), test::random_control(rng)};
    const DynamicsParams params{0.1, 0.1, false};
    Rng wind_rng(static_cast<std::uint64_t>(p));
    EXPECT_EQ(step_world_true(w, u, uh, calm, params, wind_rng),
              step_world_planning(w, u, uh, params));
  }
}

// --- costs ------------------------------------------------------------------

bool near_bump_boundary(const CarState& r, const CarState& h) {
  const double a = (r.lon - h.lon) / kRoad.collision_radius_lon;
  const double b = (r.lat - h.lat) / kRoad.collision_radius_lat;
  return std::abs(a * a + b * b - 1.0) < 0.05;
}

bool near_offroad_kink(const CarState& r) {
  const double x = std::abs(r.lat) - kRoad.road_half_width;
  return std::abs(x) < 1e-3 || std::abs(x - kRoad.offroad_band) < 1e-3;
}

TEST(CostProperty, FeatureJacobianMatchesFiniteDifferences) {
  Rng rng(2001);
  int checked = 0;
  while (checked < kPoints) {
    WorldState w;
    w.robot = test::random_car(rng);
    w.robot.lat = rng.uniform(-0.4, 0.4);
    CarState h = w.robot;
    h.lat += rng.uniform(-0.2, 0.2);
    h.lon += rng.uniform(-0.8, 0.8);
    w.humans = {h};
    if (near_bump_boundary(w.robot, h) || near_offroad_kink(w.robot)) continue;
    ++checked;
    FeatureJacobian jac{};
    features_and_jacobian(w, Control{}, kRoad, 1.0, jac);
    for (int j = 0; j < 4; ++j) {
      auto hi = as_array(w.robot);
      auto lo = hi;
      hi[j] += kFdStep;
      lo[j] -= kFdStep;
      WorldState wh = w;
      WorldState wl = w;
      wh.robot = from_array(hi);
      wl.robot = from_array(lo);
      const FeatureVector fh = features(wh, Control{}, kRoad, 1.0);
      const FeatureVector fl = features(wl, Control{}, kRoad, 1.0);
      for (std::size_t k = 0; k < kNumFeatures; ++k) {
        const double fd = (fh[k] - fl[k]) / (2 * kFdStep);
        ASSERT_LE(grad_err(jac[k][j], fd), kFeatureTol) << checked << ' ' << k << ' ' << j;
      }
    }
  }
}

TEST(CostProperty, FeatureRanges) {
  Rng rng(2002);
  for (int p = 0; p < 1000; ++p) {
    WorldState w;
    w.robot = test::random_car(rng);
    w.robot.lat = rng.uniform(-0.6, 0.6);
    w.humans = {test::random_car(rng), test::random_car(rng)};
    const FeatureVector f = features(w, Control{}, kRoad, 1.0);
    for (double x : f) ASSERT_TRUE(std::isfinite(x));
    ASSERT_GE(f[kCollision], 0.0);
    ASSERT_LE(f[kCollision], 1.0);
    ASSERT_GE(f[kOffRoad], 0.0);
    ASSERT_LE(f[kOffRoad], 1.0);
    for (std::size_t k : {kSpeedError, kClosestLane, kLeftLane, kMiddleLane, kRightLane}) {
      ASSERT_GE(f[k], 0.0);
    }
  }
}

TEST(CostProperty, CollisionNonIncreasingInScaledDistance) {
  Rng rng(2003);
  for (int ray = 0; ray < 50; ++ray) {
    const double angle = rng.uniform(0.0, 2.0 * M_PI);
    double prev = 2.0;
    for (int i = 0; i < 200; ++i) {
      const double d = i / 200.0;
      WorldState w;
      w.robot = {0.0, 0.0, 0.0, 1.0};
      w.humans = {{d * std::sin(angle) * kRoad.collision_radius_lat,
                   d * std::cos(angle) * kRoad.collision_radius_lon, 0.0, 1.0}};
      const double f2 = features(w, Control{}, kRoad, 1.0)[kCollision];
      ASSERT_LE(f2, prev) << ray << ' ' << d;
      prev = f2;
    }
  }
}

TEST(CostProperty, LinearInWeights) {
  Rng rng(2004);
  for (int p = 0; p < kPoints; ++p) {
    CostWeights t1;
    CostWeights t2;
    for (double& x : t1.w) x = rng.normal();
    for (double& x : t2.w) x = rng.normal();
    const double a = rng.uniform(-3, 3);
    const double b = rng.uniform(-3, 3);
    CostWeights mix;
    for (std::size_t k = 0; k < kNumFeatures; ++k) mix.w[k] = a * t1.w[k] + b * t2.w[k];
    WorldState w;
    w.robot = test::random_car(rng);
    w.humans = {test::random_car(rng)};
    const double lhs = cost(mix, w, Control{}, kRoad, 1.0);
    const double rhs = a * cost(t1, w, Control{}, kRoad, 1.0) + b * cost(t2, w, Control{}, kRoad, 1.0);
    EXPECT_LE(test::rel_err(lhs, rhs), 1e-12);
  }
}

TEST(CostProperty, CumulativeCostScalesWithWeights) {
  const Scenario s = build_scenario(1);
  const Rollout r = mpc_rollout(s.theta_true, s.theta_true, s, 0);
  CostWeights scaled = s.theta_true;
  for (double& x : scaled.w) x *= 3.5;
  EXPECT_LE(test::rel_err(cumulative_true_cost(r, scaled, s.road, s.v_target),
                          3.5 * cumulative_true_cost(r, s.theta_true, s.road, s.v_target)),
            1e-12);
}

TEST(CostProperty, NormalizationIdempotentAndUnit) {
  Rng rng(2005);
  for (int p = 0; p < 1000; ++p) {
    RawWeights raw;
    const double scale = std::pow(10.0, rng.uniform(-6, 6));
    for (double& x : raw) x = scale * rng.normal();
    const CostWeights once = normalize_weights(raw);
    ASSERT_NEAR(once.norm(), 1.0, 1e-9);
    const CostWeights twice = normalize_weights(once.w);
    ASSERT_EQ(once.w, twice.w);
  }
}

TEST(CostProperty, NormalizationRejectsDegenerateVectors) {
  EXPECT_THROW(normalize_weights(RawWeights{}), NormalizationError);
  EXPECT_THROW(normalize_weights(RawWeights{NAN, 1, 0, 0, 0, 0, 0}), NormalizationError);
  EXPECT_THROW(normalize_weights(RawWeights{INFINITY, 0, 0, 0, 0, 0, 0}), NormalizationError);
}

TEST(CostProperty, HeatmapCellsMatchCost) {
  Rng rng(2006);
  CostWeights theta;
  for (double& x : theta.w) x = std::abs(rng.normal());
  const std::vector<CarState> humans{{0.0, 0.5, 0.0, 0.8}};
  GridSpec g;
  g.rows = 13;
  g.cols = 11;
  const Heatmap m = heatmap(theta, kRoad, 1.0, g, 0.9, 0.05, humans);
  for (std::size_t i = 0; i < g.rows; ++i) {
    for (std::size_t j = 0; j < g.cols; ++j) {
      WorldState w;
      w.robot = {m.lat_at(j), m.lon_at(i), 0.05, 0.9};
      w.humans = humans;
      ASSERT_EQ(m.at(i, j), cost(theta, w, Control{}, kRoad, 1.0)) << i << ' ' << j;
    }
  }
}

TEST(CostProperty, HeatmapMirrorSymmetric) {
  // Mirror-symmetric weights on a mirror-symmetric road, human on the center line.
  const CostWeights theta = normalize_weights(RawWeights{0.5, 2.0, 1.0, 1.0, 0.3, 0.2, 0.3});
  const std::vector<CarState> humans{{0.0, 0.4, 0.0, 1.0}};
  GridSpec g;
  g.rows = 9;
  g.cols = 21;
  const Heatmap m = heatmap(theta, kRoad, 1.0, g, 1.0, 0.0, humans);
  for (std::size_t i = 0; i < g.rows; ++i) {
    for (std::size_t j = 0; j < g.cols; ++j) {
      ASSERT_NEAR(m.at(i, j), m.at(i, g.cols - 1 - j), 1e-12) << i << ' ' << j;
    }
  }
}

// --- human / belief -----------------------------------------------------------

TEST(BeliefProperty, SumsToOneAfterAnyUpdates) {
  Rng rng(3001);
  for (int seq = 0; seq < 50; ++seq) {
    Belief b = Belief::uniform({FixedSpeed{0.5}, MergeAtReveal{1, 0, 0.5, 0.5},
                                MergeAtReveal{2, 0, 0.5, 0.5}});
    for (int k = 0; k < 30; ++k) {
      std::vector<double> errs(3);
      for (double& e : errs) e = std::abs(rng.normal(0.0, 0.1));
      b = update_belief_from_errors(b, errs, 0.05).belief;
      const double sum = std::accumulate(b.probs.begin(), b.probs.end(), 0.0);
      ASSERT_NEAR(sum, 1.0, 1e-9);
      for (double p : b.probs) {
        ASSERT_GE(p, 0.0);
        ASSERT_LE(p, 1.0);
      }
    }
  }
}

TEST(BeliefProperty, InvariantToLikelihoodRescaling) {
  Rng rng(3002);
  const double sigma = 0.05;
  for (int p = 0; p < kPoints; ++p) {
    Belief b = Belief::uniform({FixedSpeed{0.5}, FixedSpeed{0.6}, FixedSpeed{0.7}});
    const double q = rng.uniform(0.1, 0.8);
    b.probs = {q, (1 - q) / 2, (1 - q) / 2};
    std::vector<double> errs(3);
    for (double& e : errs) e = rng.uniform(0.0, 0.02);
    // Adding c to every squared error multiplies every likelihood by exp(-c / 2 sigma^2).
    const double c = rng.uniform(0.0, 0.05);
    std::vector<double> shifted = errs;
    for (double& e : shifted) e += c;
    const Belief a = update_belief_from_errors(b, errs, sigma).belief;
    const Belief s = update_belief_from_errors(b, shifted, sigma).belief;
    for (std::size_t k = 0; k < 3; ++k) ASSERT_NEAR(a.probs[k], s.probs[k], 1e-12);
  }
}

TEST(BeliefProperty, Scenario3PreRevealStasis) {
  const Scenario s = build_scenario(3);
  const auto& hs = s.belief0.hypotheses;
  const int reveal = std::get<MergeAtReveal>(hs[0]).reveal_step;
  for (std::size_t truth = 0; truth < hs.size(); ++truth) {
    WorldState w = s.nominal_start;
    Belief b = s.belief0;
    for (int t = 0; t < reveal; ++t) {
      const auto observed = human_controls(hs[truth], w, s.road, s.dynamics);
      std::vector<Control> predicted;
      for (const auto& h : hs) predicted.push_back(human_controls(h, w, s.road, s.dynamics)[0]);
      b = update_belief(b, observed[0], predicted, s.likelihood_sigma).belief;
      ASSERT_EQ(b.probs, s.belief0.probs) << t;
      w = step_world_planning(w, Control(0.1, 0.0), observed, s.dynamics);
    }
  }
}

// --- planner ------------------------------------------------------------------

TEST(PlannerProperty, GradientMatchesFiniteDifferences) {
  Rng rng(4001);
  const DynamicsParams dyn{0.1, 0.1, false};
  for (int p = 0; p < 120; ++p) {
    CostWeights theta;
    for (double& x : theta.w) x = rng.normal();
    WorldState w;
    w.robot = test::random_car(rng);
    CarState h = w.robot;
    h.lat = rng.uniform(-0.2, 0.2);
    h.lon += rng.uniform(-0.5, 1.0);
    h.speed = rng.uniform(0.3, 1.0);
    w.humans = {h};
    w.t = static_cast<int>(rng.uniform(5, 12));
    Belief b = Belief::uniform({MergeAtReveal{1, 8, 0.5, 0.5}, MergeAtReveal{2, 8, 0.5, 0.5}});
    const int K = 5;
    ControlSequence seq;
    for (int k = 0; k < K; ++k) seq.push_back(test::random_control(rng, 0.8));
    const PlanProblem problem(theta, w, b, K, kRoad, 1.0, dyn);
    PlanGradient g;
    problem.value_and_gradient(seq, g);
    for (int k = 0; k < K; ++k) {
      for (int c = 0; c < 2; ++c) {
        ControlSequence hi = seq;
        ControlSequence lo = seq;
        const double d = c == 0 ? kFdStep : 0.0;
        const double a = c == 1 ? kFdStep : 0.0;
        hi[k] = Control(seq[k].steer() + d, seq[k].accel() + a);
        lo[k] = Control(seq[k].steer() - d, seq[k].accel() - a);
        const double fd = (problem.value(hi) - problem.value(lo)) / (2 * kFdStep);
        ASSERT_LE(grad_err(g[k][c], fd), kPlanGradTol) << p << ' ' << k << ' ' << c;
      }
    }
  }
}

TEST(PlannerProperty, ObjectiveScalesWithWeights) {
  Rng rng(4002);
  const DynamicsParams dyn;
  for (int p = 0; p < kPoints; ++p) {
    CostWeights theta;
    for (double& x : theta.w) x = rng.normal();
    const double c = rng.uniform(0.1, 10.0);
    CostWeights scaled = theta;
    for (double& x : scaled.w) x *= c;
    WorldState w;
    w.robot = test::random_car(rng);
    w.humans = {test::random_car(rng)};
    const Belief b = Belief::certain(FixedSpeed{0.5});
    ControlSequence seq;
    for (int k = 0; k < 5; ++k) seq.push_back(test::random_control(rng, 1.0));
    EXPECT_LE(test::rel_err(plan_objective(scaled, w, b, seq, kRoad, 1.0, dyn),
                            c * plan_objective(theta, w, b, seq, kRoad, 1.0, dyn)),
              1e-12);
  }
}

TEST(PlannerProperty, PlanIsWithinBoundsAndBestOfSeeds) {
  Rng rng(4003);
  PlannerConfig cfg;
  const DynamicsParams dyn;
  for (int p = 0; p < 20; ++p) {
    CostWeights theta;
    for (double& x : theta.w) x = std::abs(rng.normal());
    WorldState w;
    w.robot = test::random_car(rng);
    w.humans = {test::random_car(rng)};
    const PlanProblem problem(theta, w, Belief::certain(FixedSpeed{0.7}), cfg.horizon, kRoad, 1.0,
                              dyn);
    const ControlSequence warm(5, test::random_control(rng, 1.0));
    const PlanResult r = optimize_plan(problem, cfg, &warm);
    ASSERT_EQ(r.controls.size(), 5u);
    for (const Control& u : r.controls) {
      ASSERT_LE(std::abs(u.steer()), kSteerMax);
      ASSERT_LE(std::abs(u.accel()), kAccelMax);
    }
    ASSERT_EQ(r.objective, problem.value(r.controls));
    ASSERT_LE(r.objective, problem.value(warm));
    for (const NamedInit& init : cfg.initializations) {
      ASSERT_LE(r.objective, problem.value(constant_sequence(init, cfg.horizon)));
    }
  }
}

// --- rollouts and design --------------------------------------------------------

TEST(RolloutProperty, LengthDeterminismAndRescoring) {
  for (int id : {1, 2, 3}) {
    const Scenario s = build_scenario(id, true);
    const Rollout a = mpc_rollout(s.theta_true, s.theta_true, s, 8);
    const Rollout b = mpc_rollout(s.theta_true, s.theta_true, s, 8);
    ASSERT_EQ(a.steps.size(), static_cast<std::size_t>(s.horizon));
    EXPECT_EQ(a.cumulative_true_cost, b.cumulative_true_cost);
    EXPECT_EQ(a.final_state, b.final_state);
    for (std::size_t t = 0; t < a.steps.size(); ++t) {
      EXPECT_EQ(a.steps[t].state.t, static_cast<int>(t));
      EXPECT_EQ(a.steps[t].state.humans.size(), s.nominal_start.humans.size());
    }
    const double sum = std::accumulate(a.per_step_true_cost.begin(), a.per_step_true_cost.end(), 0.0);
    EXPECT_NEAR(a.cumulative_true_cost, sum, 1e-9);
    EXPECT_NEAR(cumulative_true_cost(a, s.theta_true, s.road, s.v_target), a.cumulative_true_cost,
                1e-9);
  }
}

TEST(RolloutProperty, NoWindSingleHypothesisIsSeedIndependent) {
  const Scenario s = build_scenario(2);
  ASSERT_EQ(s.belief0.hypotheses.size(), 1u);
  const Rollout ref = mpc_rollout(s.theta_true, s.theta_true, s, 0);
  for (std::uint64_t seed : {1ULL, 42ULL, 123456789ULL}) {
    EXPECT_EQ(mpc_rollout(s.theta_true, s.theta_true, s, seed).final_state, ref.final_state);
  }
}

TEST(DesignProperty, FitnessEqualsBruteForceMean) {
  Rng rng(5001);
  const Scenario s = build_scenario(3);
  const TrainingSet set = make_training_set(s, 3, 77);
  for (int p = 0; p < 5; ++p) {
    const CostWeights cand = sample_unit_weights(rng);
    double sum = 0.0;
    int n = 0;
    for (std::size_t j = 0; j < set.states.size(); ++j) {
      for (std::size_t h = 0; h < s.true_humans.size(); ++h) {
        RolloutOptions opt;
        opt.start = &set.states[j];
        opt.true_human = h;
        sum += mpc_rollout(cand, s.theta_true, s, set.seeds[j], opt).cumulative_true_cost;
        ++n;
      }
    }
    EXPECT_NEAR(fitness(cand.w, s, set.states, s.theta_true, set.seeds), sum / n, 1e-12);
  }
}

TEST(DesignProperty, BudgetExactlyRespected) {
  const Scenario s = build_scenario(1);
  for (const char* method : {"cma", "random"}) {
    DesignConfig cfg;
    cfg.budget = 85;
    cfg.workers = 1;
    const DesignResult r = std::string(method) == "cma" ? cma_search(cfg, s, s.theta_true)
                                                        : random_search(cfg, s, s.theta_true);
    EXPECT_EQ(r.history.size(), 85u) << method;
  }
  for (int budget : {1, 8, 9, 10, 19}) {
    DesignConfig cfg;
    cfg.budget = budget;
    cfg.workers = 1;
    EXPECT_EQ(cma_search(cfg, s, s.theta_true).history.size(), static_cast<std::size_t>(budget));
  }
}

TEST(DesignProperty, BestNoWorseThanTrueWeights) {
  const Scenario s = build_scenario(2);
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    DesignConfig cfg;
    cfg.budget = 20;
    cfg.master_seed = seed;
    cfg.workers = 1;
    const DesignResult r = cma_search(cfg, s, s.theta_true);
    const TrainingSet set = make_training_set(s, 1, derive_seed(seed, "train"));
    EXPECT_LE(r.best_fitness, fitness(s.theta_true.w, s, set.states, s.theta_true, set.seeds));
  }
}

TEST(HarnessProperty, SelfCompareExactlyZero) {
  for (int id : {1, 2, 3}) {
    const Scenario s = build_scenario(id);
    for (std::uint64_t seed : {0ULL, 5ULL}) {
      EXPECT_EQ(compare_experiment(s, s.theta_true, 4, seed, "surrogate", 1).second.reduction_pct,
                0.0);
    }
  }
}

}  // namespace
}  // namespace ocd
