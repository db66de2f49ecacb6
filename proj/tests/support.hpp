#pragma once

#include <algorithm>
#include <cmath>

#include "ocd/dynamics.hpp"
#include "ocd/random.hpp"

namespace ocd::test {

// |a - b| relative to the larger magnitude, floored at 1 so that derivatives
// that are zero analytically are compared in absolute terms.
inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline CarState random_car(Rng& rng) {
  return CarState{rng.uniform(-0.25, 0.25), rng.uniform(-1.0, 1.0), rng.uniform(-0.5, 0.5),
                  rng.uniform(0.2, 1.5)};
}

inline Control random_control(Rng& rng, double bound = 0.9) {
  return Control(rng.uniform(-bound, bound), rng.uniform(-bound, bound));
}

}  // namespace ocd::test
