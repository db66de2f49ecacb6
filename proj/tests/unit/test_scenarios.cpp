#include <gtest/gtest.h>

#include <cmath>

#include "ocd/errors.hpp"
#include "ocd/human.hpp"
#include "ocd/scenarios.hpp"

namespace ocd {
namespace {

TEST(BuildScenario, TaskHorizons) {
  EXPECT_EQ(build_scenario(1).horizon, 15);
  EXPECT_EQ(build_scenario(2).horizon, 15);
  EXPECT_EQ(build_scenario(3).horizon, 20);
}

TEST(BuildScenario, RecedingHorizonIsFive) {
  for (int id : {1, 2, 3}) EXPECT_EQ(build_scenario(id).planner.horizon, 5);
}

TEST(BuildScenario, UnknownIdRejected) {
  EXPECT_THROW(build_scenario(4), ConfigError);
  EXPECT_THROW(build_scenario(0, true), ConfigError);
}

TEST(BuildScenario, TrueWeightsAreUnitNorm) {
  for (int id : {1, 2, 3}) {
    const Scenario s = build_scenario(id);
    EXPECT_NEAR(s.theta_true.norm(), 1.0, 1e-12);
    EXPECT_EQ(s.theta_true.label, WeightsLabel::kTrue);
  }
}

TEST(BuildScenario, ScenarioShapes) {
  const Scenario s1 = build_scenario(1);
  EXPECT_EQ(s1.nominal_start.robot.lat, s1.nominal_start.humans[0].lat);
  EXPECT_GT(s1.nominal_start.humans[0].lon, s1.nominal_start.robot.lon);

  const Scenario s2 = build_scenario(2);
  EXPECT_LT(s2.nominal_start.robot.lat, s2.nominal_start.humans[0].lat);
  EXPECT_GT(s2.theta_true.w[kRightLane], 0.0);
  ASSERT_EQ(s2.planner.initializations.size(), 1u);
  EXPECT_EQ(s2.planner.initializations[0].name, "straight");

  const Scenario s3 = build_scenario(3);
  const double line = 0.5 * (s3.road.lane_centers[1] + s3.road.lane_centers[2]);
  EXPECT_EQ(s3.nominal_start.robot.lat, line);
  EXPECT_EQ(s3.nominal_start.humans[0].lat, line);
  EXPECT_EQ(s3.belief0.probs, (std::vector<double>{0.5, 0.5}));
}

TEST(BuildScenario, WindFlagFillsWindParams) {
  EXPECT_FALSE(build_scenario(1).wind.enabled);
  const Scenario s = build_scenario(1, true);
  EXPECT_TRUE(s.wind.enabled);
  EXPECT_EQ(s.wind.mean_lat_force, default_wind().mean_lat_force);
  EXPECT_EQ(s.wind.std_lat_force, default_wind().std_lat_force);
}

TEST(BuildScenario, RepeatableByteForByte) {
  for (int id : {1, 2, 3}) {
    EXPECT_EQ(to_json(build_scenario(id)).dump(), to_json(build_scenario(id)).dump());
  }
}

TEST(Scenario3, HypothesesAgreeBeforeReveal) {
  const Scenario s = build_scenario(3);
  WorldState w = s.nominal_start;
  const auto& hs = s.belief0.hypotheses;
  const int reveal = std::get<MergeAtReveal>(hs[0]).reveal_step;
  for (int t = 0; t < reveal; ++t) {
    const auto a = human_controls(hs[0], w, s.road, s.dynamics);
    const auto b = human_controls(hs[1], w, s.road, s.dynamics);
    EXPECT_EQ(a, b) << t;
    w = step_world_planning(w, Control{}, a, s.dynamics);
  }
  EXPECT_NE(human_controls(hs[0], w, s.road, s.dynamics),
            human_controls(hs[1], w, s.road, s.dynamics));
}

TEST(SampleInitialState, ZeroStdGivesNominal) {
  Scenario s = build_scenario(2);
  s.start_std = CarState{};
  Rng rng(1);
  EXPECT_EQ(sample_initial_state(s, rng), s.nominal_start);
}

TEST(SampleInitialState, Deterministic) {
  const Scenario s = build_scenario(1);
  Rng a(77);
  Rng b(77);
  EXPECT_EQ(sample_initial_state(s, a), sample_initial_state(s, b));
}

TEST(SampleInitialState, MeanNearNominal) {
  const Scenario s = build_scenario(1);
  Rng rng(2024);
  const int n = 1000;
  double lat = 0.0;
  double lon = 0.0;
  double speed = 0.0;
  for (int i = 0; i < n; ++i) {
    const WorldState w = sample_initial_state(s, rng);
    lat += w.robot.lat;
    lon += w.robot.lon;
    speed += w.robot.speed;
    EXPECT_EQ(w.robot.heading, s.nominal_start.robot.heading);
  }
  const double se = 3.0 / std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(lat / n, s.nominal_start.robot.lat, se * s.start_std.lat);
  EXPECT_NEAR(lon / n, s.nominal_start.robot.lon, se * s.start_std.lon);
  EXPECT_NEAR(speed / n, s.nominal_start.robot.speed, se * s.start_std.speed);
}

TEST(ScenarioJson, RoundTrip) {
  for (int id : {1, 2, 3}) {
    const Scenario s = build_scenario(id, id == 2);
    const Scenario back = scenario_from_json(to_json(s));
    EXPECT_EQ(to_json(back).dump(), to_json(s).dump());
  }
}

TEST(ScenarioJson, RejectsWrongSchema) {
  nlohmann::json j = to_json(build_scenario(1));
  j["schema_version"] = 99;
  EXPECT_THROW(scenario_from_json(j), ConfigError);
}

TEST(WeightsJson, ObjectOrArray) {
  const std::array<double, 7> want{1, 2, 3, 4, 5, 6, 7};
  EXPECT_EQ(raw_weights_from_json(nlohmann::json(want)), want);
  EXPECT_EQ(raw_weights_from_json(nlohmann::json{{"weights", want}}), want);
  EXPECT_THROW(raw_weights_from_json(nlohmann::json::array({1, 2})), ConfigError);
}

}  // namespace
}  // namespace ocd
