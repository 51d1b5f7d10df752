#pragma once

#include "uavco/airframe.hpp"
#include "uavco/types.hpp"

namespace uavco {

// Stall blending: sigma(alpha) = 1 deep in attached flow, 0 deep post-stall.
struct StallParams {
  double alpha_stall = 0.2617993877991494;  // 15 deg
  double blend_sharpness = 50.0;            // 1/rad
};

// Section/planform aerodynamic constants.
struct AeroSettings {
  double c_d0 = 0.02;       // attached-flow parasitic drag
  double c_m0 = -0.02;      // attached-flow pitching moment about c/4
  double oswald_e = 0.9;
  double c_d90 = 1.98;      // flat-plate drag at 90 deg incidence
};

struct SectionCoefficients {
  double cl = 0.0;
  double cd = 0.0;
  double cm = 0.0;
};

// Aerodynamic wrench about the CG in body axes.
struct Wrench {
  Vec3 force = Vec3::Zero();
  Vec3 moment = Vec3::Zero();
};

double blend_sigma(double alpha, const StallParams& p);

// 2D coefficients at effective incidence alpha_eff = alpha + tau * delta,
// blending an attached-flow model (finite-AR corrected slope, induced drag,
// constant pitching moment) with post-stall flat-plate behaviour.
SectionCoefficients section_coefficients(double alpha, double delta_local,
                                         double tau, double aspect_ratio,
                                         const StallParams& stall,
                                         const AeroSettings& aero);

// Per-unit-span wind-axis loads (drag, 0, lift) and (0, pitching moment, 0).
void section_loads(const SectionCoefficients& c, double rho, double airspeed,
                   double chord, Vec3* force, Vec3* moment);

// Sum of strip wrenches about the CG.  Velocities in body axes; wind is the
// inertial-frame gust velocity already rotated into the body frame.
Wrench total_wrench(const PhysicalModel& model, const Vec3& v_body,
                    const Vec3& omega_body, const Vec3& wind_body,
                    const ControlInput& u, double rho,
                    const StallParams& stall, const AeroSettings& aero);

}  // namespace uavco
