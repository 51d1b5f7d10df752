#include "uavco/dynamics.hpp"

#include <cmath>

#include "uavco/quat.hpp"

namespace uavco {

Vec13 state_derivative(const State& x, const ControlInput& u,
                       const VehicleParams& vp, const Vec3& wind_inertial) {
  const PhysicalModel& m = *vp.model;
  const Vec4 qn = quat::normalized(x.q);
  const Mat3 R_bi = quat::rot_body_to_inertial(qn);

  const Vec3 wind_body = R_bi.transpose() * wind_inertial;
  const Wrench aero = total_wrench(m, x.v, x.w, wind_body, u, vp.env.rho,
                                   vp.stall, vp.aero);

  const Vec3 gravity_body = R_bi.transpose() * Vec3(0, 0, -vp.env.g);
  const Vec3 force = aero.force + Vec3(u.thrust, 0, 0) + m.mass * gravity_body;

  Vec13 dx;
  dx.segment<3>(0) = R_bi * x.v;
  dx.segment<4>(3) = quat::derivative(x.q, x.w);
  dx.segment<3>(7) = force / m.mass - x.w.cross(x.v);
  dx.segment<3>(10) = m.inertia_inv * (aero.moment - x.w.cross(m.inertia * x.w));
  return dx;
}

State integrate_step(const State& x, const ControlInput& u, double dt,
                     const VehicleParams& vp, const Vec3& wind_inertial) {
  const Vec13 x0 = x.pack();
  const Vec13 k1 = state_derivative(x, u, vp, wind_inertial);
  const Vec13 k2 = state_derivative(State::unpack(x0 + 0.5 * dt * k1), u, vp,
                                    wind_inertial);
  const Vec13 k3 = state_derivative(State::unpack(x0 + 0.5 * dt * k2), u, vp,
                                    wind_inertial);
  const Vec13 k4 =
      state_derivative(State::unpack(x0 + dt * k3), u, vp, wind_inertial);
  State out =
      State::unpack(x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  out.q = quat::normalized(out.q);
  return out;
}

ControlInput apply_actuator_dynamics(const ControlInput& cmd,
                                     const ControlInput& prev, double dt,
                                     const ActuatorLimits& lim) {
  ControlInput out;
  out.thrust = std::clamp(cmd.thrust, lim.thrust_min, lim.thrust_max);
  const double max_step = lim.rate_max * dt;
  for (int i = 0; i < 3; ++i) {
    const double step = std::clamp(cmd.delta[i] - prev.delta[i], -max_step, max_step);
    out.delta[i] = std::clamp(prev.delta[i] + step, lim.delta_min, lim.delta_max);
  }
  return out;
}

namespace {

State level_state(double alpha, double speed) {
  State s;
  s.q = quat::from_axis_angle(Vec3(0, 1, 0), -alpha);  // nose up by alpha
  s.v = quat::rot_inertial_to_body(s.q) * Vec3(speed, 0, 0);
  return s;
}

Vec3 trim_residual(const Vec3& z, double speed, const VehicleParams& vp) {
  const State s = level_state(z[0], speed);
  ControlInput u;
  u.thrust = z[1];
  u.delta[0] = z[2];
  const Vec13 dx = state_derivative(s, u, vp);
  return Vec3(dx[7], dx[9], dx[11]);  // body-x/z accel, pitch rate accel
}

}  // namespace

TrimResult find_level_trim(const VehicleParams& vp, double speed,
                           const ActuatorLimits& lim) {
  Vec3 z(0.03, 0.5, 0.0);  // alpha, thrust, elevator
  TrimResult res;
  for (int it = 0; it < 80; ++it) {
    const Vec3 r = trim_residual(z, speed, vp);
    if (r.lpNorm<Eigen::Infinity>() < 1e-10) {
      res.converged = true;
      break;
    }
    Mat3 J;
    for (int j = 0; j < 3; ++j) {
      const double h = 1e-7 * (1.0 + std::abs(z[j]));
      Vec3 zp = z, zm = z;
      zp[j] += h;
      zm[j] -= h;
      J.col(j) = (trim_residual(zp, speed, vp) - trim_residual(zm, speed, vp)) /
                 (2.0 * h);
    }
    Vec3 step = J.fullPivLu().solve(-r);
    // Backtrack until the residual shrinks.
    double t = 1.0;
    const double r0 = r.norm();
    for (int ls = 0; ls < 30; ++ls) {
      if (trim_residual(z + t * step, speed, vp).norm() < r0) break;
      t *= 0.5;
    }
    z += t * step;
  }
  res.alpha = z[0];
  res.state = level_state(z[0], speed);
  res.input.thrust = z[1];
  res.input.delta[0] = z[2];
  if (!res.converged &&
      trim_residual(z, speed, vp).lpNorm<Eigen::Infinity>() < 1e-8) {
    res.converged = true;
  }
  (void)lim;
  return res;
}

}  // namespace uavco
