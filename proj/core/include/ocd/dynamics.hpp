#pragma once

#include <array>
#include <span>
#include <vector>

#include "ocd/random.hpp"

namespace ocd {

inline constexpr double kSteerMax = 1.0;
inline constexpr double kAccelMax = 1.0;

/// Kinematic state of one car. `heading` is measured from the road direction;
/// positive heading moves the car toward larger `lat` (to the right).
struct CarState {
  double lat = 0.0;
  double lon = 0.0;
  double heading = 0.0;
  double speed = 0.0;

  bool finite() const noexcept;
  friend bool operator==(const CarState&, const CarState&) = default;
};

/// Steering and acceleration input. Always within [-kSteerMax, kSteerMax] x
/// [-kAccelMax, kAccelMax]; out-of-range values are clamped on construction.
class Control {
 public:
  constexpr Control() = default;
  Control(double steer, double accel);

  double steer() const noexcept { return steer_; }
  double accel() const noexcept { return accel_; }

  friend bool operator==(const Control&, const Control&) = default;

 private:
  double steer_ = 0.0;
  double accel_ = 0.0;
};

struct WorldState {
  CarState robot;
  std::vector<CarState> humans;
  int t = 0;

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

struct WindParams {
  double mean_lat_force = 0.0;
  double std_lat_force = 0.0;
  bool enabled = false;
};

struct DynamicsParams {
  double dt = 0.1;
  double friction = 0.0;
  /// Clamp speed at zero after each step (no reversing).
  bool clamp_speed = false;
};

/// d(next state)/d(state) and d(next state)/d(control), row = output field in
/// (lat, lon, heading, speed) order.
struct CarJacobian {
  std::array<std::array<double, 4>, 4> wrt_state{};
  std::array<std::array<double, 2>, 4> wrt_control{};
};

/// One explicit Euler step of the kinematic car. Throws InvalidStateError on
/// non-finite input.
CarState step_car(const CarState& s, const Control& u, double dt, double friction,
                  bool clamp_speed = false);

/// Jacobian of step_car at (s, u). When the speed clamp is active the speed
/// row is zeroed.
CarJacobian step_car_jacobian(const CarState& s, const Control& u, double dt,
                              double friction, bool clamp_speed = false);

/// The true transition f: every car stepped, optional lateral wind on the
/// robot drawn from `rng`, t incremented.
WorldState step_world_true(const WorldState& w, const Control& u_robot,
                           std::span<const Control> u_humans, const WindParams& wind,
                           const DynamicsParams& params, Rng& rng);

/// The planner's model: step_world_true with wind permanently off.
WorldState step_world_planning(const WorldState& w, const Control& u_robot,
                               std::span<const Control> u_humans,
                               const DynamicsParams& params);

}  // namespace ocd
