#include "ocd/costs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "ocd/errors.hpp"
#include "ocd/rollout.hpp"

namespace ocd {

void RoadGeometry::validate() const {
  if (!std::is_sorted(lane_centers.begin(), lane_centers.end())) {
    throw ConfigError("road: lane centers must be sorted ascending");
  }
  if (!(lane_width > 0.0)) throw ConfigError("road: lane width must be positive");
  double widest = 0.0;
  for (double c : lane_centers) widest = std::max(widest, std::abs(c));
  if (road_half_width < widest + lane_width / 2.0 - 1e-12) {
    throw ConfigError("road: drivable half width does not cover every lane");
  }
  if (!(collision_radius_lon > 0.0) || !(collision_radius_lat > 0.0) || !(offroad_band > 0.0)) {
    throw ConfigError("road: feature radii must be positive");
  }
}

double CostWeights::norm() const noexcept {
  double s = 0.0;
  for (double x : w) s += x * x;
  return std::sqrt(s);
}

double bump(double d_squared) noexcept {
  if (d_squared >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - d_squared));
}

namespace {

// Smooth minimum of the three squared lane distances: the harmonic
// combination d1 d2 d3 / (d2 d3 + d1 d3 + d1 d2). Zero exactly at a lane
// center, close to the true minimum away from lane lines.
double smooth_min3(const std::array<double, 3>& d, std::array<double, 3>& grad) {
  const double p = d[0] * d[1] * d[2];
  const double q = d[1] * d[2] + d[0] * d[2] + d[0] * d[1];
  const std::array<double, 3> dp{d[1] * d[2], d[0] * d[2], d[0] * d[1]};
  const std::array<double, 3> dq{d[1] + d[2], d[0] + d[2], d[0] + d[1]};
  for (int i = 0; i < 3; ++i) grad[i] = (dp[i] * q - p * dq[i]) / (q * q);
  return p / q;
}

}  // namespace

FeatureVector robot_features(const CarState& r, std::span<const CarState> humans,
                             const RoadGeometry& road, double v_target, FeatureJacobian* jac) {
  FeatureVector f{};
  FeatureJacobian j{};

  const double dv = r.speed - v_target;
  f[kSpeedError] = dv * dv;
  j[kSpeedError][3] = 2.0 * dv;

  // Collision: 1 - prod(1 - bump_h), equal to the single bump for one human
  // and bounded by 1 for any number of them.
  double survive = 1.0;
  std::array<double, 4> dsurvive{};
  for (const CarState& h : humans) {
    const double dlon = (r.lon - h.lon) / road.collision_radius_lon;
    const double dlat = (r.lat - h.lat) / road.collision_radius_lat;
    const double s = dlon * dlon + dlat * dlat;
    const double b = bump(s);
    if (b > 0.0) {
      const double inv = 1.0 / (1.0 - s);
      const double db_ds = -b * inv * inv;
      const double db_dlat = db_ds * 2.0 * dlat / road.collision_radius_lat;
      const double db_dlon = db_ds * 2.0 * dlon / road.collision_radius_lon;
      // d(survive * (1 - b)) = dsurvive * (1 - b) - survive * db
      dsurvive[0] = dsurvive[0] * (1.0 - b) - survive * db_dlat;
      dsurvive[1] = dsurvive[1] * (1.0 - b) - survive * db_dlon;
    }
    survive *= 1.0 - b;
  }
  f[kCollision] = 1.0 - survive;
  j[kCollision][0] = -dsurvive[0];
  j[kCollision][1] = -dsurvive[1];

  const double past = (std::abs(r.lat) - road.road_half_width) / road.offroad_band;
  if (past > 0.0) {
    const double x = std::min(past, 1.0);
    f[kOffRoad] = x * x * (3.0 - 2.0 * x);
    if (past < 1.0) {
      j[kOffRoad][0] = 6.0 * x * (1.0 - x) / road.offroad_band * (r.lat > 0.0 ? 1.0 : -1.0);
    }
  }

  std::array<double, 3> d{};
  std::array<double, 3> dd{};
  const double w2 = road.lane_width * road.lane_width;
  for (std::size_t i = 0; i < kNumLanes; ++i) {
    const double e = r.lat - road.lane_centers[i];
    d[i] = e * e / w2;
    dd[i] = 2.0 * e / w2;
    f[kLeftLane + i] = d[i];
    j[kLeftLane + i][0] = dd[i];
  }
  std::array<double, 3> g{};
  f[kClosestLane] = smooth_min3(d, g);
  j[kClosestLane][0] = g[0] * dd[0] + g[1] * dd[1] + g[2] * dd[2];

  if (jac != nullptr) *jac = j;
  return f;
}

FeatureVector features(const WorldState& w, const Control& /*u*/, const RoadGeometry& road,
                       double v_target) {
  return robot_features(w.robot, w.humans, road, v_target, nullptr);
}

FeatureVector features_and_jacobian(const WorldState& w, const Control& /*u*/,
                                    const RoadGeometry& road, double v_target,
                                    FeatureJacobian& jac) {
  return robot_features(w.robot, w.humans, road, v_target, &jac);
}

double cost(const CostWeights& theta, const WorldState& w, const Control& u,
            const RoadGeometry& road, double v_target) {
  const FeatureVector f = features(w, u, road, v_target);
  double c = 0.0;
  for (std::size_t i = 0; i < kNumFeatures; ++i) c += theta.w[i] * f[i];
  return c;
}

CostWeights normalize_weights(std::span<const double, kNumFeatures> raw, WeightsLabel label) {
  double s = 0.0;
  for (double x : raw) s += x * x;
  const double n = std::sqrt(s);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw NormalizationError("normalize_weights: vector has zero or non-finite norm");
  }
  CostWeights out;
  out.label = label;
  // Already unit up to rounding: keep the bits so normalizing twice is exact.
  const double scale = std::abs(n - 1.0) <= 4.0 * std::numeric_limits<double>::epsilon() ? 1.0 : n;
  for (std::size_t i = 0; i < kNumFeatures; ++i) out.w[i] = raw[i] / scale;
  return out;
}

double cumulative_true_cost(const Rollout& rollout, const CostWeights& theta_true,
                            const RoadGeometry& road, double v_target) {
  if (rollout.steps.empty()) throw ArityError("cumulative_true_cost: empty rollout");
  double total = 0.0;
  for (const RolloutStep& s : rollout.steps) {
    total += cost(theta_true, s.state, s.control, road, v_target);
  }
  return total;
}

double Heatmap::lat_at(std::size_t col) const {
  // Centered form so that symmetric bounds give exactly mirrored samples.
  const double n = static_cast<double>(grid.cols - 1);
  return 0.5 * (grid.lat_min + grid.lat_max) +
         0.5 * (grid.lat_max - grid.lat_min) * (2.0 * static_cast<double>(col) - n) / n;
}

double Heatmap::lon_at(std::size_t row) const {
  const double n = static_cast<double>(grid.rows - 1);
  return 0.5 * (grid.lon_min + grid.lon_max) +
         0.5 * (grid.lon_max - grid.lon_min) * (2.0 * static_cast<double>(row) - n) / n;
}

Heatmap heatmap(const CostWeights& theta, const RoadGeometry& road, double v_target,
                const GridSpec& grid, double speed, double heading,
                const std::vector<CarState>& humans) {
  if (grid.rows < 2 || grid.cols < 2) {
    throw ArityError("heatmap: grid needs at least 2 samples per axis");
  }
  Heatmap map;
  map.grid = grid;
  map.values.resize(grid.rows * grid.cols);
  WorldState w;
  w.humans = humans;
  w.robot.speed = speed;
  w.robot.heading = heading;
  for (std::size_t i = 0; i < grid.rows; ++i) {
    w.robot.lon = map.lon_at(i);
    for (std::size_t j = 0; j < grid.cols; ++j) {
      w.robot.lat = map.lat_at(j);
      map.values[i * grid.cols + j] = cost(theta, w, Control{}, road, v_target);
    }
  }
  return map;
}

namespace {

std::string shortest(double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

}  // namespace

void write_heatmap_csv(std::ostream& out, const Heatmap& map) {
  const GridSpec& g = map.grid;
  out << "lat_min,lat_max,lon_min,lon_max,rows,cols\n";
  out << shortest(g.lat_min) << ',' << shortest(g.lat_max) << ',' << shortest(g.lon_min) << ','
      << shortest(g.lon_max) << ',' << g.rows << ',' << g.cols << '\n';
  for (std::size_t i = 0; i < g.rows; ++i) {
    for (std::size_t j = 0; j < g.cols; ++j) {
      if (j != 0) out << ',';
      out << shortest(map.at(i, j));
    }
    out << '\n';
  }
}

}  // namespace ocd
