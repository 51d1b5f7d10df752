#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "uavco/types.hpp"

namespace uavco {

// Free design variables: wing span, wing chord, wing longitudinal position
// (leading edge aft of the fuselage nose), all in metres.
struct DesignParams {
  double span = 0.5;
  double chord = 0.15;
  double x_wing = 0.25;

  Vec3 vec() const { return Vec3(span, chord, x_wing); }
  static DesignParams from_vec(const Vec3& v) { return {v[0], v[1], v[2]}; }
};

struct DesignBounds {
  Vec3 lower = Vec3(0.05, 0.05, 0.05);
  Vec3 upper = Vec3(1.0, 0.5, 0.5);

  bool contains(const Vec3& d) const {
    return (d.array() >= lower.array()).all() &&
           (d.array() <= upper.array()).all();
  }
  Vec3 clamp(const Vec3& d) const {
    return d.cwiseMax(lower).cwiseMin(upper);
  }
  Vec3 width() const { return upper - lower; }
  Vec3 centre() const { return 0.5 * (lower + upper); }
};

// Fixed airframe geometry and mass properties shared by every design.
struct AirframeConfig {
  double fuselage_radius = 0.05;        // m
  double fuselage_length = 0.8;         // m
  double fuselage_linear_density = 0.3125;  // kg/m (thin-walled tube)
  double payload_mass = 0.35;           // kg, point mass riding at the CG
  double tail_span = 0.3;               // m, both tail surfaces
  double tail_chord = 0.1;              // m
  double tail_position_fraction = 0.9;  // tail quarter-chord / fuselage length
  double surface_area_density = 0.6;    // kg/m^2, thin-plate lifting surfaces
  double flap_chord_fraction = 0.3;     // control-surface chord / local chord
  int strips_per_surface = 6;
};

enum class ControlChannel : std::uint8_t { kNone, kElevator, kAileron, kRudder };

// One spanwise station of a lifting surface.  `r` is the quarter-chord point
// in body frame relative to the CG; `orient` maps strip-local axes
// (x chordwise forward, y spanwise, z surface normal) into the body frame.
struct Strip {
  double width = 0.0;   // m, spanwise extent
  double chord = 0.0;   // m
  Vec3 r = Vec3::Zero();
  Mat3 orient = Mat3::Identity();
  ControlChannel channel = ControlChannel::kNone;
  double channel_sign = 1.0;
};

struct LiftingSurface {
  double span = 0.0;
  double chord = 0.0;
  double aspect_ratio = 0.0;
  double flap_effectiveness = 0.0;  // lift effectiveness of the hinged flap
  bool cambered = true;             // symmetric sections carry no camber moment
  std::vector<Strip> strips;
};

// Everything the dynamics needs: total mass, inertia about the CG, the strip
// set, and the longitudinal bookkeeping used for static-margin reporting
// (positions measured aft of the fuselage nose).
struct PhysicalModel {
  double mass = 0.0;
  Mat3 inertia = Mat3::Zero();
  Mat3 inertia_inv = Mat3::Zero();
  double x_cg = 0.0;         // m aft of nose
  double x_np = 0.0;         // m aft of nose
  double wing_span = 0.0;
  double wing_aspect_ratio = 0.0;
  std::vector<LiftingSurface> surfaces;  // wing, horizontal tail, vertical tail
};

// Lift effectiveness of a plain flap occupying the rear `chord_fraction` of
// the section (thin-airfoil result).
double flap_effectiveness(double chord_fraction);

// Finite-wing lift-curve slope used for the neutral-point estimate.
double lift_curve_slope(double aspect_ratio, double oswald_e = 0.9);

// Neutral point of a two-surface layout from slope-weighted aerodynamic
// centres (positions aft of the nose).
double neutral_point(double a_wing, double s_wing, double x_ac_wing,
                     double a_tail, double s_tail, double x_ac_tail);

// Parallel-axis transfer of an inertia tensor from the CG to a point offset
// by r (and its inverse with -r).
Mat3 translate_inertia(const Mat3& inertia_cg, double mass, const Vec3& r);

// Build the physical model for a design.  Throws std::invalid_argument when d
// violates the bounds or the configuration is degenerate.
PhysicalModel map_design(const DesignParams& d, const AirframeConfig& cfg,
                         const DesignBounds& bounds = DesignBounds{});

// Component-wise multiplicative Gaussian perturbation, clamped to bounds.
DesignParams perturb_design(const DesignParams& d, double sigma,
                            std::mt19937_64& rng,
                            const DesignBounds& bounds = DesignBounds{});

inline double static_margin(const PhysicalModel& m) { return m.x_np - m.x_cg; }

}  // namespace uavco
