#include "ocd/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ocd/errors.hpp"

namespace ocd {

namespace {

CostWeights true_weights(std::array<double, kNumFeatures> raw) {
  return normalize_weights(raw, WeightsLabel::kTrue);
}

}  // namespace

WindParams default_wind() {
  return WindParams{0.05, 0.02, true};
}

void Scenario::validate() const {
  if (id < 1) throw ConfigError("scenario: id must be positive");
  road.validate();
  planner.validate();
  if (!(dynamics.dt > 0.0)) throw ConfigError("scenario: dt must be positive");
  if (horizon <= planner.horizon) {
    throw ConfigError("scenario: task horizon must exceed the planning horizon");
  }
  if (std::abs(theta_true.norm() - 1.0) > 1e-9) {
    throw ConfigError("scenario: true weights must have unit norm");
  }
  if (!nominal_start.robot.finite()) throw ConfigError("scenario: non-finite start");
  if (!(start_std.lat >= 0.0 && start_std.lon >= 0.0 && start_std.heading >= 0.0 &&
        start_std.speed >= 0.0)) {
    throw ConfigError("scenario: start standard deviations must be >= 0");
  }
  if (true_humans.empty()) throw ConfigError("scenario: at least one true human behavior");
  for (const auto& h : true_humans) ocd::validate(h);
  belief0.validate();
  if (!(wind.std_lat_force >= 0.0)) throw ConfigError("scenario: wind std must be >= 0");
  if (!(likelihood_sigma > 0.0)) throw ConfigError("scenario: likelihood sigma must be > 0");
}

Scenario build_scenario(int id, bool wind_enabled) {
  Scenario s;
  s.id = id;
  s.dynamics = DynamicsParams{0.1, 0.1, false};
  s.v_target = 1.0;
  s.start_std = CarState{0.03, 0.05, 0.0, 0.05};
  s.nominal_start.t = 0;
  const auto& lanes = s.road.lane_centers;

  switch (id) {
    case 1: {
      // Slower car ahead in the robot's lane.
      s.horizon = 15;
      s.theta_true = true_weights({1.0, 4.0, 4.0, 8.0, 0.0, 0.0, 0.0});
      s.nominal_start.robot = CarState{lanes[1], 0.0, 0.0, 1.0};
      s.nominal_start.humans = {CarState{lanes[1], 0.9, 0.0, 0.3}};
      s.true_humans = {FixedSpeed{0.3}};
      break;
    }
    case 2: {
      // Robot in the left lane, beside a human in the middle lane; the task
      // wants it in the right lane.
      s.horizon = 15;
      s.theta_true = true_weights({1.0, 4.0, 4.0, 0.5, 0.0, 0.0, 1.5});
      s.nominal_start.robot = CarState{lanes[0], 0.0, 0.0, 1.0};
      s.nominal_start.humans = {CarState{lanes[1], 0.22, 0.0, 1.0}};
      s.true_humans = {FixedSpeed{1.0}};
      s.planner.initializations = {{"straight", 0.0, 0.0}};
      break;
    }
    case 3: {
      // Both cars straddle the line between the middle and right lanes; the
      // human will merge into one of them.
      s.horizon = 20;
      s.theta_true = true_weights({1.5, 4.0, 4.0, 0.8, 0.0, 0.0, 0.0});
      const double line = 0.5 * (lanes[1] + lanes[2]);
      s.nominal_start.robot = CarState{line, 0.0, 0.0, 1.0};
      s.nominal_start.humans = {CarState{line, 0.9, 0.0, 0.5}};
      const int reveal = s.horizon / 2;
      s.true_humans = {MergeAtReveal{1, reveal, 0.5, 0.5}, MergeAtReveal{2, reveal, 0.5, 0.5}};
      break;
    }
    default:
      throw ConfigError("build_scenario: unknown scenario id " + std::to_string(id) +
                        " (expected 1, 2 or 3)");
  }
  s.belief0 = Belief::uniform(s.true_humans);
  if (wind_enabled) s.wind = default_wind();
  s.validate();
  return s;
}

WorldState sample_initial_state(const Scenario& s, Rng& rng) {
  WorldState w = s.nominal_start;
  const CarState& sd = s.start_std;
  CarState& r = w.robot;
  // Draw order is fixed so a zero std never shifts later draws.
  const double dlat = rng.normal();
  const double dlon = rng.normal();
  const double dheading = rng.normal();
  const double dspeed = rng.normal();
  r.lat += sd.lat * dlat;
  r.lon += sd.lon * dlon;
  r.heading += sd.heading * dheading;
  r.speed += sd.speed * dspeed;
  r.speed = std::max(r.speed, 0.0);
  r.lat = std::clamp(r.lat, -s.road.road_half_width, s.road.road_half_width);
  return w;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json car_to_json(const CarState& c) {
  return {{"lat", c.lat}, {"lon", c.lon}, {"heading", c.heading}, {"speed", c.speed}};
}

CarState car_from_json(const nlohmann::json& j) {
  return CarState{j.at("lat").get<double>(), j.at("lon").get<double>(),
                  j.at("heading").get<double>(), j.at("speed").get<double>()};
}

}  // namespace

nlohmann::json to_json(const HumanHypothesis& h) {
  if (const auto* f = std::get_if<FixedSpeed>(&h)) {
    return {{"kind", "fixed_speed"}, {"speed", f->speed}};
  }
  const auto& m = std::get<MergeAtReveal>(h);
  return {{"kind", "merge_at_reveal"},
          {"target_lane", m.target_lane},
          {"reveal_step", m.reveal_step},
          {"merge_steer", m.merge_steer},
          {"cruise_speed", m.cruise_speed}};
}

HumanHypothesis hypothesis_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "fixed_speed") return FixedSpeed{j.at("speed").get<double>()};
  if (kind == "merge_at_reveal") {
    return MergeAtReveal{j.at("target_lane").get<int>(), j.at("reveal_step").get<int>(),
                         j.at("merge_steer").get<double>(), j.at("cruise_speed").get<double>()};
  }
  throw ConfigError("unknown human hypothesis kind '" + kind + "'");
}

nlohmann::json to_json(const CostWeights& w) {
  return {{"label", w.label == WeightsLabel::kTrue ? "true" : "surrogate"},
          {"weights", w.w}};
}

std::array<double, kNumFeatures> raw_weights_from_json(const nlohmann::json& j) {
  const nlohmann::json& arr = j.is_object() ? j.at("weights") : j;
  if (!arr.is_array() || arr.size() != kNumFeatures) {
    throw ConfigError("weights must be an array of 7 numbers");
  }
  std::array<double, kNumFeatures> out{};
  for (std::size_t i = 0; i < kNumFeatures; ++i) out[i] = arr[i].get<double>();
  return out;
}

nlohmann::json to_json(const Scenario& s) {
  nlohmann::json inits = nlohmann::json::array();
  for (const NamedInit& i : s.planner.initializations) {
    inits.push_back({{"name", i.name}, {"steer", i.steer}, {"accel", i.accel}});
  }
  nlohmann::json humans = nlohmann::json::array();
  for (const CarState& h : s.nominal_start.humans) humans.push_back(car_to_json(h));
  nlohmann::json truths = nlohmann::json::array();
  for (const auto& h : s.true_humans) truths.push_back(to_json(h));
  nlohmann::json hyps = nlohmann::json::array();
  for (const auto& h : s.belief0.hypotheses) hyps.push_back(to_json(h));

  return {
      {"schema_version", kScenarioSchemaVersion},
      {"id", s.id},
      {"horizon", s.horizon},
      {"road",
       {{"lane_centers", s.road.lane_centers},
        {"lane_width", s.road.lane_width},
        {"road_half_width", s.road.road_half_width},
        {"collision_radius_lon", s.road.collision_radius_lon},
        {"collision_radius_lat", s.road.collision_radius_lat},
        {"offroad_band", s.road.offroad_band}}},
      {"planner",
       {{"horizon", s.planner.horizon},
        {"gd_steps", s.planner.gd_steps},
        {"step_size", s.planner.step_size},
        {"warm_start", s.planner.warm_start},
        {"initializations", inits}}},
      {"dynamics",
       {{"dt", s.dynamics.dt},
        {"friction", s.dynamics.friction},
        {"clamp_speed", s.dynamics.clamp_speed}}},
      {"theta_true", s.theta_true.w},
      {"v_target", s.v_target},
      {"nominal_start", {{"robot", car_to_json(s.nominal_start.robot)}, {"humans", humans}}},
      {"start_std", car_to_json(s.start_std)},
      {"true_humans", truths},
      {"belief0", {{"hypotheses", hyps}, {"probs", s.belief0.probs}}},
      {"wind",
       {{"enabled", s.wind.enabled},
        {"mean_lat_force", s.wind.mean_lat_force},
        {"std_lat_force", s.wind.std_lat_force}}},
      {"likelihood_sigma", s.likelihood_sigma},
  };
}

Scenario scenario_from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kScenarioSchemaVersion) {
      throw ConfigError("scenario schema_version " + std::to_string(version) +
                        " is not supported (expected " +
                        std::to_string(kScenarioSchemaVersion) + ")");
    }
    Scenario s;
    s.id = j.at("id").get<int>();
    s.horizon = j.at("horizon").get<int>();

    const auto& road = j.at("road");
    s.road.lane_centers = road.at("lane_centers").get<std::array<double, kNumLanes>>();
    s.road.lane_width = road.at("lane_width").get<double>();
    s.road.road_half_width = road.at("road_half_width").get<double>();
    s.road.collision_radius_lon = road.at("collision_radius_lon").get<double>();
    s.road.collision_radius_lat = road.at("collision_radius_lat").get<double>();
    s.road.offroad_band = road.at("offroad_band").get<double>();

    const auto& pl = j.at("planner");
    s.planner.horizon = pl.at("horizon").get<int>();
    s.planner.gd_steps = pl.at("gd_steps").get<int>();
    s.planner.step_size = pl.at("step_size").get<double>();
    s.planner.warm_start = pl.at("warm_start").get<bool>();
    s.planner.initializations.clear();
    for (const auto& i : pl.at("initializations")) {
      s.planner.initializations.push_back(NamedInit{i.at("name").get<std::string>(),
                                                    i.at("steer").get<double>(),
                                                    i.at("accel").get<double>()});
    }

    const auto& dyn = j.at("dynamics");
    s.dynamics.dt = dyn.at("dt").get<double>();
    s.dynamics.friction = dyn.at("friction").get<double>();
    s.dynamics.clamp_speed = dyn.at("clamp_speed").get<bool>();

    s.theta_true = normalize_weights(raw_weights_from_json(j.at("theta_true")),
                                     WeightsLabel::kTrue);
    s.v_target = j.at("v_target").get<double>();

    const auto& start = j.at("nominal_start");
    s.nominal_start.robot = car_from_json(start.at("robot"));
    s.nominal_start.humans.clear();
    for (const auto& h : start.at("humans")) s.nominal_start.humans.push_back(car_from_json(h));
    s.nominal_start.t = 0;
    s.start_std = car_from_json(j.at("start_std"));

    for (const auto& h : j.at("true_humans")) s.true_humans.push_back(hypothesis_from_json(h));
    const auto& b = j.at("belief0");
    for (const auto& h : b.at("hypotheses")) {
      s.belief0.hypotheses.push_back(hypothesis_from_json(h));
    }
    s.belief0.probs = b.at("probs").get<std::vector<double>>();

    const auto& wind = j.at("wind");
    s.wind.enabled = wind.at("enabled").get<bool>();
    s.wind.mean_lat_force = wind.at("mean_lat_force").get<double>();
    s.wind.std_lat_force = wind.at("std_lat_force").get<double>();
    s.likelihood_sigma = j.at("likelihood_sigma").get<double>();

    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario json: ") + e.what());
  }
}

}  // namespace ocd
