#include "ocd/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ocd/errors.hpp"

namespace ocd {

bool CarState::finite() const noexcept {
  return std::isfinite(lat) && std::isfinite(lon) && std::isfinite(heading) &&
         std::isfinite(speed);
}

Control::Control(double steer, double accel)
    : steer_(std::clamp(steer, -kSteerMax, kSteerMax)),
      accel_(std::clamp(accel, -kAccelMax, kAccelMax)) {
  // std::clamp passes NaN through; keep it so callers can detect divergence.
}

CarState step_car(const CarState& s, const Control& u, double dt, double friction,
                  bool clamp_speed) {
  if (!s.finite() || !std::isfinite(u.steer()) || !std::isfinite(u.accel())) {
    throw InvalidStateError("step_car: non-finite state or control");
  }
  if (!(dt > 0.0)) {
    throw InvalidStateError("step_car: dt must be positive");
  }
  CarState n;
  n.lat = s.lat + dt * s.speed * std::sin(s.heading);
  n.lon = s.lon + dt * s.speed * std::cos(s.heading);
  n.heading = s.heading + dt * s.speed * u.steer();
  n.speed = s.speed + dt * (u.accel() - friction * s.speed);
  if (clamp_speed && n.speed < 0.0) n.speed = 0.0;
  return n;
}

CarJacobian step_car_jacobian(const CarState& s, const Control& u, double dt,
                              double friction, bool clamp_speed) {
  const double sh = std::sin(s.heading);
  const double ch = std::cos(s.heading);
  CarJacobian j;
  auto& a = j.wrt_state;
  auto& b = j.wrt_control;
  a[0] = {1.0, 0.0, dt * s.speed * ch, dt * sh};
  a[1] = {0.0, 1.0, -dt * s.speed * sh, dt * ch};
  a[2] = {0.0, 0.0, 1.0, dt * u.steer()};
  a[3] = {0.0, 0.0, 0.0, 1.0 - dt * friction};
  b[2] = {dt * s.speed, 0.0};
  b[3] = {0.0, dt};
  if (clamp_speed && s.speed + dt * (u.accel() - friction * s.speed) < 0.0) {
    a[3] = {0.0, 0.0, 0.0, 0.0};
    b[3] = {0.0, 0.0};
  }
  return j;
}

namespace {

WorldState advance(const WorldState& w, const Control& u_robot,
                   std::span<const Control> u_humans, const DynamicsParams& p) {
  if (u_humans.size() != w.humans.size()) {
    throw ArityError("step_world: expected " + std::to_string(w.humans.size()) +
                     " human controls, got " + std::to_string(u_humans.size()));
  }
  WorldState next;
  next.robot = step_car(w.robot, u_robot, p.dt, p.friction, p.clamp_speed);
  next.humans.reserve(w.humans.size());
  for (std::size_t i = 0; i < w.humans.size(); ++i) {
    next.humans.push_back(step_car(w.humans[i], u_humans[i], p.dt, p.friction, p.clamp_speed));
  }
  next.t = w.t + 1;
  return next;
}

}  // namespace

WorldState step_world_true(const WorldState& w, const Control& u_robot,
                           std::span<const Control> u_humans, const WindParams& wind,
                           const DynamicsParams& params, Rng& rng) {
  WorldState next = advance(w, u_robot, u_humans, params);
  if (wind.enabled) {
    const double g = wind.std_lat_force > 0.0
                         ? rng.normal(wind.mean_lat_force, wind.std_lat_force)
                         : wind.mean_lat_force;
    next.robot.lat += params.dt * g;
  }
  return next;
}

WorldState step_world_planning(const WorldState& w, const Control& u_robot,
                               std::span<const Control> u_humans,
                               const DynamicsParams& params) {
  return advance(w, u_robot, u_humans, params);
}

}  // namespace ocd
