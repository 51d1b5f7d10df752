#include "uavco/airframe.hpp"

#include <cmath>
#include <stdexcept>

namespace uavco {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Midpoint spanwise stations, mirrored exactly in floating point so that
// symmetric airframes produce bitwise-antisymmetric lateral loads.
std::vector<double> midpoint_stations(double span, int n) {
  std::vector<double> y(n);
  for (int k = 0; k < n; ++k) {
    y[k] = static_cast<double>(2 * k - n + 1) * span / (2.0 * n);
  }
  return y;
}

// Thin rectangular plate lying in the xy plane: a along x, b along y.
Mat3 plate_inertia(double mass, double a, double b) {
  Mat3 I = Mat3::Zero();
  I(0, 0) = mass * b * b / 12.0;
  I(1, 1) = mass * a * a / 12.0;
  I(2, 2) = mass * (a * a + b * b) / 12.0;
  return I;
}

struct Component {
  double mass;
  Vec3 r;  // centroid, nose-origin body axes (x forward, so aft = -x)
  Mat3 inertia;
};

}  // namespace

double flap_effectiveness(double chord_fraction) {
  const double cf = std::clamp(chord_fraction, 0.0, 1.0);
  const double theta = std::acos(2.0 * cf - 1.0);
  return 1.0 - (theta - std::sin(theta)) / kPi;
}

double lift_curve_slope(double aspect_ratio, double oswald_e) {
  const double a0 = 2.0 * kPi;
  return a0 / (1.0 + a0 / (kPi * oswald_e * aspect_ratio));
}

double neutral_point(double a_wing, double s_wing, double x_ac_wing,
                     double a_tail, double s_tail, double x_ac_tail) {
  const double den = a_wing * s_wing + a_tail * s_tail;
  if (den <= 0.0) throw std::invalid_argument("neutral_point: zero total lift slope");
  return (a_wing * s_wing * x_ac_wing + a_tail * s_tail * x_ac_tail) / den;
}

Mat3 translate_inertia(const Mat3& inertia_cg, double mass, const Vec3& r) {
  return inertia_cg + mass * (r.squaredNorm() * Mat3::Identity() - r * r.transpose());
}

PhysicalModel map_design(const DesignParams& d, const AirframeConfig& cfg,
                         const DesignBounds& bounds) {
  const Vec3 dv = d.vec();
  if (!dv.allFinite() || !bounds.contains(dv)) {
    throw std::invalid_argument("map_design: design outside bounds");
  }
  if (cfg.fuselage_length <= 0.0 || cfg.tail_span <= 0.0 ||
      cfg.tail_chord <= 0.0 || cfg.strips_per_surface < 1) {
    throw std::invalid_argument("map_design: degenerate airframe config");
  }

  const double b = d.span, c = d.chord, xw = d.x_wing;
  const double L = cfg.fuselage_length;
  const double bt = cfg.tail_span, ct = cfg.tail_chord;
  const double x_tail_qc = cfg.tail_position_fraction * L;  // aft of nose

  // Component buildup in nose-origin body axes (x forward, z up).
  std::vector<Component> parts;
  const double m_fus = cfg.fuselage_linear_density * L;
  {
    Mat3 I = Mat3::Zero();
    const double r2 = cfg.fuselage_radius * cfg.fuselage_radius;
    I(0, 0) = m_fus * r2;
    I(1, 1) = I(2, 2) = m_fus * (r2 / 2.0 + L * L / 12.0);
    parts.push_back({m_fus, Vec3(-L / 2.0, 0, 0), I});
  }
  const double m_wing = cfg.surface_area_density * b * c;
  parts.push_back({m_wing, Vec3(-(xw + c / 2.0), 0, 0), plate_inertia(m_wing, c, b)});

  const double m_tail = cfg.surface_area_density * bt * ct;
  const double x_tail_mid = x_tail_qc + ct / 4.0;  // plate centroid, aft of nose
  parts.push_back({m_tail, Vec3(-x_tail_mid, 0, 0), plate_inertia(m_tail, ct, bt)});
  {
    // Vertical fin: plate in the xz plane rising from the fuselage axis.
    Mat3 I = Mat3::Zero();
    I(0, 0) = m_tail * bt * bt / 12.0;
    I(1, 1) = m_tail * (ct * ct + bt * bt) / 12.0;
    I(2, 2) = m_tail * ct * ct / 12.0;
    parts.push_back({m_tail, Vec3(-x_tail_mid, 0, bt / 2.0), I});
  }

  double m_struct = 0.0;
  Vec3 first_moment = Vec3::Zero();
  for (const auto& p : parts) {
    m_struct += p.mass;
    first_moment += p.mass * p.r;
  }
  const Vec3 cg = m_struct > 0.0 ? Vec3(first_moment / m_struct) : Vec3::Zero();

  PhysicalModel m;
  m.mass = m_struct + cfg.payload_mass;  // payload rides at the CG
  m.x_cg = -cg[0];

  Mat3 I_cg = Mat3::Zero();
  for (const auto& p : parts) {
    I_cg += translate_inertia(p.inertia, p.mass, p.r - cg);
  }
  m.inertia = I_cg;
  m.inertia_inv = I_cg.determinant() > 1e-300 ? Mat3(I_cg.inverse()) : Mat3::Zero();

  const double tau = flap_effectiveness(cfg.flap_chord_fraction);
  const int n = cfg.strips_per_surface;

  LiftingSurface wing;
  wing.span = b;
  wing.chord = c;
  wing.aspect_ratio = b / c;
  wing.flap_effectiveness = tau;
  for (double y : midpoint_stations(b, n)) {
    Strip s;
    s.width = b / n;
    s.chord = c;
    s.r = Vec3(-(xw + c / 4.0), y, 0) - cg;
    s.channel = std::abs(y) < 1e-12 ? ControlChannel::kNone : ControlChannel::kAileron;
    s.channel_sign = y >= 0.0 ? 1.0 : -1.0;
    wing.strips.push_back(s);
  }

  LiftingSurface htail;
  htail.span = bt;
  htail.chord = ct;
  htail.aspect_ratio = bt / ct;
  htail.flap_effectiveness = tau;
  for (double y : midpoint_stations(bt, n)) {
    Strip s;
    s.width = bt / n;
    s.chord = ct;
    s.r = Vec3(-x_tail_qc, y, 0) - cg;
    s.channel = ControlChannel::kElevator;
    htail.strips.push_back(s);
  }

  LiftingSurface vtail;
  vtail.span = bt;
  vtail.chord = ct;
  vtail.aspect_ratio = bt / ct;
  vtail.flap_effectiveness = tau;
  vtail.cambered = false;  // symmetric fin: no camber moment, keeps lateral symmetry
  Mat3 fin_orient;
  fin_orient << 1, 0, 0, 0, 0, -1, 0, 1, 0;  // local span -> +z, normal -> -y
  for (double z : midpoint_stations(bt, n)) {
    Strip s;
    s.width = bt / n;
    s.chord = ct;
    s.r = Vec3(-x_tail_qc, 0, z + bt / 2.0) - cg;
    s.orient = fin_orient;
    s.channel = ControlChannel::kRudder;
    vtail.strips.push_back(s);
  }

  m.surfaces = {wing, htail, vtail};
  m.wing_span = b;
  m.wing_aspect_ratio = wing.aspect_ratio;

  const double a_w = lift_curve_slope(wing.aspect_ratio);
  const double a_t = lift_curve_slope(htail.aspect_ratio);
  m.x_np = neutral_point(a_w, b * c, xw + c / 4.0, a_t, bt * ct, x_tail_qc);
  return m;
}

DesignParams perturb_design(const DesignParams& d, double sigma,
                            std::mt19937_64& rng, const DesignBounds& bounds) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec3 v = d.vec();
  for (int i = 0; i < 3; ++i) {
    v[i] += sigma * v[i] * normal(rng);
  }
  return DesignParams::from_vec(bounds.clamp(v));
}

}  // namespace uavco
