#pragma once

#include <optional>

#include "uavco/aero.hpp"
#include "uavco/airframe.hpp"
#include "uavco/types.hpp"

namespace uavco {

// Bundles everything needed to evaluate the equations of motion.
struct VehicleParams {
  const PhysicalModel* model = nullptr;
  Environment env;
  StallParams stall;
  AeroSettings aero;
};

// Continuous-time state derivative.  `wind_inertial` is the gust velocity of
// the air mass in the inertial frame.
Vec13 state_derivative(const State& x, const ControlInput& u,
                       const VehicleParams& vp,
                       const Vec3& wind_inertial = Vec3::Zero());

// One RK4 step with quaternion renormalisation after the update.
State integrate_step(const State& x, const ControlInput& u, double dt,
                     const VehicleParams& vp,
                     const Vec3& wind_inertial = Vec3::Zero());

// Surface deflections slew toward the command at most rate_max; thrust is
// clamped instantaneously.
ControlInput apply_actuator_dynamics(const ControlInput& cmd,
                                     const ControlInput& prev, double dt,
                                     const ActuatorLimits& lim);

struct TrimResult {
  State state;
  ControlInput input;
  double alpha = 0.0;  // pitch of the body axis above the flight path
  bool converged = false;
};

// Steady wings-level flight at the given speed along inertial +x: solves for
// pitch attitude, thrust and elevator such that the body-frame accelerations
// vanish.
TrimResult find_level_trim(const VehicleParams& vp, double speed,
                           const ActuatorLimits& lim);

}  // namespace uavco
