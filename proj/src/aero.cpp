#include "uavco/aero.hpp"

#include <cmath>

namespace uavco {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kMinAirspeed = 1e-9;
}  // namespace

double blend_sigma(double alpha, const StallParams& p) {
  return 0.5 * (1.0 + std::tanh(p.blend_sharpness *
                                (p.alpha_stall - std::abs(alpha))));
}

SectionCoefficients section_coefficients(double alpha, double delta_local,
                                         double tau, double aspect_ratio,
                                         const StallParams& stall,
                                         const AeroSettings& aero) {
  const double ar = std::max(aspect_ratio, 1e-6);
  const double alpha_eff = alpha + tau * delta_local;
  const double sigma = blend_sigma(alpha_eff, stall);

  const double slope = 2.0 * kPi / (1.0 + 2.0 / ar);
  const double cl_att = slope * alpha_eff;
  const double cdi_att = cl_att * cl_att / (kPi * aero.oswald_e * ar);

  const double sa = std::sin(alpha_eff);
  const double ca = std::cos(alpha_eff);
  const double cl_ps = aero.c_d90 * sa * ca;
  const double cd_ps = aero.c_d90 * sa * sa;

  SectionCoefficients c;
  c.cl = sigma * cl_att + (1.0 - sigma) * cl_ps;
  c.cd = sigma * (aero.c_d0 + cdi_att) + (1.0 - sigma) * cd_ps;
  c.cm = sigma * aero.c_m0;
  return c;
}

void section_loads(const SectionCoefficients& c, double rho, double airspeed,
                   double chord, Vec3* force, Vec3* moment) {
  const double q = 0.5 * rho * airspeed * airspeed;
  *force = Vec3(q * chord * c.cd, 0.0, q * chord * c.cl);
  *moment = Vec3(0.0, q * chord * chord * c.cm, 0.0);
}

Wrench total_wrench(const PhysicalModel& model, const Vec3& v_body,
                    const Vec3& omega_body, const Vec3& wind_body,
                    const ControlInput& u, double rho,
                    const StallParams& stall, const AeroSettings& aero) {
  Wrench out;
  for (const auto& surface : model.surfaces) {
    for (const auto& strip : surface.strips) {
      const Vec3 v_strip = v_body + omega_body.cross(strip.r) - wind_body;
      const Vec3 local = strip.orient.transpose() * v_strip;
      // Spanwise flow carries no section load (strip independence).
      const double ux = local[0], wz = local[2];
      const double speed = std::sqrt(ux * ux + wz * wz);
      if (speed < kMinAirspeed) continue;

      double delta = 0.0;
      switch (strip.channel) {
        case ControlChannel::kElevator: delta = u.delta[0]; break;
        case ControlChannel::kAileron: delta = u.delta[1]; break;
        case ControlChannel::kRudder: delta = u.delta[2]; break;
        case ControlChannel::kNone: break;
      }
      delta *= strip.channel_sign;

      const double alpha = std::atan2(-wz, ux);
      SectionCoefficients c = section_coefficients(
          alpha, delta, surface.flap_effectiveness, surface.aspect_ratio,
          stall, aero);
      if (!surface.cambered) c.cm = 0.0;
      Vec3 f_wind, m_wind;
      section_loads(c, rho, speed, strip.chord, &f_wind, &m_wind);

      // Wind axes in strip-local coordinates: drag opposes the strip's motion
      // through the air, lift is the in-plane perpendicular.
      Mat3 wind_to_local;
      wind_to_local.col(0) = Vec3(-ux / speed, 0.0, -wz / speed);
      wind_to_local.col(1) = Vec3(0.0, -1.0, 0.0);
      wind_to_local.col(2) = Vec3(-wz / speed, 0.0, ux / speed);
      const Mat3 R = strip.orient * wind_to_local;

      const Vec3 f_body = R * (strip.width * f_wind);
      const Vec3 m_body = R * (strip.width * m_wind);
      out.force += f_body;
      out.moment += strip.r.cross(f_body) + m_body;
    }
  }
  return out;
}

}  // namespace uavco
