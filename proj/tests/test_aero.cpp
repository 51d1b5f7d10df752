#include <doctest.h>

#include <cmath>

#include "uavco/aero.hpp"
#include "uavco/airframe.hpp"

using namespace uavco;

namespace {
const StallParams kStall{};
const AeroSettings kAero{};
constexpr double kPi = 3.14159265358979323846;
}  // namespace

TEST_CASE("stall blend is exactly one half at the stall angle and even") {
  CHECK(blend_sigma(kStall.alpha_stall, kStall) == 0.5);
  CHECK(blend_sigma(-kStall.alpha_stall, kStall) == 0.5);
  for (double a = 0.0; a <= kPi; a += 0.01) {
    CHECK(std::abs(blend_sigma(a, kStall) - blend_sigma(-a, kStall)) <= 1e-15);
  }
  // monotone decreasing in |alpha|
  double prev = 2.0;
  for (double a = 0.0; a <= kPi; a += 0.01) {
    const double s = blend_sigma(a, kStall);
    CHECK(s <= prev + 1e-15);
    prev = s;
  }
  CHECK(1.0 - blend_sigma(0.0, kStall) < 1e-9);
  CHECK(blend_sigma(kPi / 2, kStall) < 1e-9);
}

TEST_CASE("section coefficients match attached flow pre-stall") {
  const auto c = section_coefficients(0.05, 0.0, 0.0, 8.620689655172413,
                                      kStall, kAero);
  CHECK(c.cl == doctest::Approx(0.25499940370047025).epsilon(1e-9));
  const double slope = 2.0 * kPi / (1.0 + 2.0 / 8.620689655172413);
  CHECK(std::abs(c.cl - slope * 0.05) < 1e-6);
  CHECK(c.cm == doctest::Approx(-0.02).epsilon(1e-9));
}

TEST_CASE("zero incidence gives zero lift and parasitic drag only") {
  const auto c = section_coefficients(0.0, 0.0, 0.0, 8.0, kStall, kAero);
  CHECK(c.cl == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(c.cd == doctest::Approx(kAero.c_d0).epsilon(1e-9));
}

TEST_CASE("deep stall recovers flat-plate behaviour") {
  const auto c = section_coefficients(kPi / 2, 0.0, 0.0, 8.0, kStall, kAero);
  CHECK(std::abs(c.cd - 1.98) < 1e-9);
  CHECK(std::abs(c.cl) < 1e-9);
}

TEST_CASE("coefficients are finite and C1-smooth across the polar") {
  const double h = 1e-4;
  double prev_cl = 0.0, prev_cd = 0.0, have_prev = false;
  double prev_dcl = 0.0, prev_dcd = 0.0;
  bool have_prev_diff = false;
  for (double a = -kPi; a <= kPi + 1e-12; a += h) {
    const auto c = section_coefficients(a, 0.0, 0.0, 6.0, kStall, kAero);
    REQUIRE(std::isfinite(c.cl));
    REQUIRE(std::isfinite(c.cd));
    REQUIRE(std::isfinite(c.cm));
    CHECK(c.cd >= 0.0);
    if (have_prev) {
      const double dcl = (c.cl - prev_cl) / h;
      const double dcd = (c.cd - prev_cd) / h;
      if (have_prev_diff) {
        // bounded second differences: no jumps in the first derivative
        CHECK(std::abs(dcl - prev_dcl) < 0.1);
        CHECK(std::abs(dcd - prev_dcd) < 0.1);
      }
      prev_dcl = dcl;
      prev_dcd = dcd;
      have_prev_diff = true;
    }
    prev_cl = c.cl;
    prev_cd = c.cd;
    have_prev = true;
  }
}

TEST_CASE("flap deflection shifts the zero-lift angle") {
  const double tau = 0.6607459491435452;
  const auto c = section_coefficients(0.0, 0.1, tau, 8.0, kStall, kAero);
  const double slope = 2.0 * kPi / (1.0 + 2.0 / 8.0);
  CHECK(c.cl == doctest::Approx(slope * tau * 0.1).epsilon(1e-6));
}

TEST_CASE("section loads reference value") {
  Vec3 f, m;
  section_loads(SectionCoefficients{1.0, 0.0, 0.0}, 1.225, 10.0, 0.1, &f, &m);
  CHECK(f[2] == doctest::Approx(6.125).epsilon(1e-12));  // lift per unit span
  CHECK(f[0] == doctest::Approx(0.0));
  CHECK(m.norm() == doctest::Approx(0.0));
}

namespace {
PhysicalModel reference_model() {
  return map_design(DesignParams{0.8, 0.15, 0.2}, AirframeConfig{});
}
}  // namespace

TEST_CASE("lateral antisymmetry under mirrored flow and controls") {
  const auto model = reference_model();
  const Vec3 v(9.0, 1.3, -0.7);
  const Vec3 w(0.8, 0.25, -0.45);
  ControlInput u;
  u.thrust = 0.0;
  u.delta = Vec3(0.12, 0.2, -0.15);  // elevator, aileron, rudder

  Vec3 vm(v[0], -v[1], v[2]);
  Vec3 wm(-w[0], w[1], -w[2]);
  ControlInput um;
  um.delta = Vec3(u.delta[0], -u.delta[1], -u.delta[2]);

  const auto a = total_wrench(model, v, w, Vec3::Zero(), u, 1.225, kStall, kAero);
  const auto b = total_wrench(model, vm, wm, Vec3::Zero(), um, 1.225, kStall, kAero);

  CHECK(std::abs(a.force[0] - b.force[0]) < 1e-10);
  CHECK(std::abs(a.force[2] - b.force[2]) < 1e-10);
  CHECK(std::abs(a.force[1] + b.force[1]) < 1e-10);
  CHECK(std::abs(a.moment[0] + b.moment[0]) < 1e-10);
  CHECK(std::abs(a.moment[2] + b.moment[2]) < 1e-10);
  CHECK(std::abs(a.moment[1] - b.moment[1]) < 1e-10);
}

TEST_CASE("wrench scales with dynamic pressure") {
  const auto model = reference_model();
  const Vec3 v(8.0, 0.5, -1.2), w(0.3, -0.2, 0.1), gust(0.4, -0.3, 0.6);
  ControlInput u;
  u.delta = Vec3(0.05, -0.1, 0.08);
  const double s = 1.7;
  const auto a = total_wrench(model, v, w, gust, u, 1.225, kStall, kAero);
  const auto b = total_wrench(model, s * v, s * w, s * gust, u, 1.225, kStall, kAero);
  CHECK((b.force - s * s * a.force).norm() / a.force.norm() < 1e-9);
  CHECK((b.moment - s * s * a.moment).norm() / a.moment.norm() < 1e-9);
}

TEST_CASE("roll rate produces an opposing rolling moment") {
  const auto model = reference_model();
  const auto wr = total_wrench(model, Vec3(10, 0, 0), Vec3(2.0, 0, 0),
                               Vec3::Zero(), ControlInput{}, 1.225, kStall, kAero);
  CHECK(wr.moment[0] < 0.0);
}

TEST_CASE("elevator deflection pitches nose-down with an aft tail") {
  // Single-strip oracle: the tail sits aft of the CG, so extra tail lift from
  // positive elevator must produce a positive (nose-down) body-y moment.
  AirframeConfig cfg;
  cfg.strips_per_surface = 1;
  const auto model = map_design(DesignParams{0.8, 0.15, 0.2}, cfg);
  const Vec3 v(10, 0, 0);
  const auto w0 = total_wrench(model, v, Vec3::Zero(), Vec3::Zero(),
                               ControlInput{}, 1.225, kStall, kAero);
  ControlInput u;
  u.delta[0] = 0.1;
  const auto w1 = total_wrench(model, v, Vec3::Zero(), Vec3::Zero(), u, 1.225,
                               kStall, kAero);
  CHECK(w1.moment[1] > w0.moment[1]);

  // hand-built expectation for the tail strip alone
  const auto& tail = model.surfaces[1];
  const auto& strip = tail.strips[0];
  const double slope = 2.0 * kPi / (1.0 + 2.0 / tail.aspect_ratio);
  const double dcl = slope * tail.flap_effectiveness * 0.1;
  const double q = 0.5 * 1.225 * 100.0;
  const double dlift = q * strip.chord * strip.width * dcl;
  const double expected_dmy = -strip.r[0] * dlift;
  CHECK(w1.moment[1] - w0.moment[1] ==
        doctest::Approx(expected_dmy).epsilon(1e-3));
}

TEST_CASE("strip refinement changes the wrench only mildly") {
  AirframeConfig coarse, fine;
  coarse.strips_per_surface = 6;
  fine.strips_per_surface = 12;
  const DesignParams d{0.8, 0.15, 0.2};
  const auto mc = map_design(d, coarse);
  const auto mf = map_design(d, fine);
  const Vec3 v(10, 0, -0.8);
  const Vec3 w(0.5, 0.3, -0.2);
  ControlInput u;
  u.delta = Vec3(0.05, 0.1, -0.05);
  const auto wc = total_wrench(mc, v, w, Vec3::Zero(), u, 1.225, kStall, kAero);
  const auto wf = total_wrench(mf, v, w, Vec3::Zero(), u, 1.225, kStall, kAero);
  CHECK((wc.force - wf.force).norm() / wf.force.norm() < 0.05);
  CHECK((wc.moment - wf.moment).norm() / (wf.moment.norm() + 1e-9) < 0.05);
}

TEST_CASE("zero airspeed produces zero wrench") {
  const auto model = reference_model();
  const auto w = total_wrench(model, Vec3::Zero(), Vec3::Zero(), Vec3::Zero(),
                              ControlInput{}, 1.225, kStall, kAero);
  CHECK(w.force.norm() == 0.0);
  CHECK(w.moment.norm() == 0.0);
}
