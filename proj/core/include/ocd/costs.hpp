#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "ocd/dynamics.hpp"

namespace ocd {

inline constexpr std::size_t kNumFeatures = 7;
inline constexpr std::size_t kNumLanes = 3;

/// Feature indices. Names follow what each feature measures.
enum Feature : std::size_t {
  kSpeedError = 0,
  kCollision = 1,
  kOffRoad = 2,
  kClosestLane = 3,
  kLeftLane = 4,
  kMiddleLane = 5,
  kRightLane = 6,
};

/// Straight three-lane road plus the shape constants of the smooth features.
struct RoadGeometry {
  std::array<double, kNumLanes> lane_centers{-0.17, 0.0, 0.17};
  double lane_width = 0.17;
  double road_half_width = 0.255;
  /// Support radii of the collision bump (longitudinal in road units, lateral
  /// in road units).
  double collision_radius_lon = 0.6;
  double collision_radius_lat = 0.15;
  /// Width of the cubic ramp from road to grass.
  double offroad_band = 0.1;

  /// Throws ConfigError if the invariants do not hold.
  void validate() const;
  friend bool operator==(const RoadGeometry&, const RoadGeometry&) = default;
};

using FeatureVector = std::array<double, kNumFeatures>;

/// Partial derivatives of each feature w.r.t. the robot state
/// (lat, lon, heading, speed).
using FeatureJacobian = std::array<std::array<double, 4>, kNumFeatures>;

enum class WeightsLabel { kTrue, kSurrogate };

struct CostWeights {
  std::array<double, kNumFeatures> w{};
  WeightsLabel label = WeightsLabel::kSurrogate;

  double norm() const noexcept;
  friend bool operator==(const CostWeights&, const CostWeights&) = default;
};

/// Compactly supported C-infinity bump, exp(1 - 1/(1 - d^2)) on d^2 < 1.
double bump(double d_squared) noexcept;

FeatureVector features(const WorldState& w, const Control& u, const RoadGeometry& road,
                       double v_target);

/// Features and their Jacobian w.r.t. the robot state in one pass.
FeatureVector features_and_jacobian(const WorldState& w, const Control& u,
                                    const RoadGeometry& road, double v_target,
                                    FeatureJacobian& jac);

/// Allocation-free form used in the planner's inner loop. `jac` may be null.
FeatureVector robot_features(const CarState& robot, std::span<const CarState> humans,
                             const RoadGeometry& road, double v_target, FeatureJacobian* jac);

double cost(const CostWeights& theta, const WorldState& w, const Control& u,
            const RoadGeometry& road, double v_target);

/// Scale to unit l2 norm. Throws NormalizationError on a zero (or non-finite
/// norm) vector.
CostWeights normalize_weights(std::span<const double, kNumFeatures> raw,
                              WeightsLabel label = WeightsLabel::kSurrogate);

struct Rollout;

/// Sum of the per-step cost of every logged (state, control) pair. Throws
/// ArityError on an empty rollout.
double cumulative_true_cost(const Rollout& rollout, const CostWeights& theta_true,
                            const RoadGeometry& road, double v_target);

struct GridSpec {
  double lat_min = -0.3;
  double lat_max = 0.3;
  double lon_min = -0.5;
  double lon_max = 1.5;
  std::size_t rows = 50;  ///< samples along lon
  std::size_t cols = 50;  ///< samples along lat
};

/// Row-major cost grid. values[i * cols + j] is the cost with the robot at
/// lon_i, lat_j, where samples include both bounds.
struct Heatmap {
  GridSpec grid;
  std::vector<double> values;

  double at(std::size_t row, std::size_t col) const { return values[row * grid.cols + col]; }
  double lat_at(std::size_t col) const;
  double lon_at(std::size_t row) const;
};

Heatmap heatmap(const CostWeights& theta, const RoadGeometry& road, double v_target,
                const GridSpec& grid, double speed, double heading,
                const std::vector<CarState>& humans);

/// Header of field names, one line of their values, then one grid row per line.
void write_heatmap_csv(std::ostream& out, const Heatmap& map);

}  // namespace ocd
