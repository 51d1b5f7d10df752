#include <doctest.h>

#include <cmath>
#include <random>

#include "uavco/quat.hpp"
#include "uavco/tvlqr.hpp"

using namespace uavco;

namespace {

Mat3 skew(const Vec3& a) {
  Mat3 m;
  m << 0, -a[2], a[1], a[2], 0, -a[0], -a[1], a[0], 0;
  return m;
}

// A near-neutral, comfortably flying test vehicle (static margin slightly
// positive, tail well clear of stall at the 10 m/s trim point).
struct Rig {
  PhysicalModel model;
  VehicleParams vp;
  ActuatorLimits lim;
  Rig() {
    model = map_design(DesignParams{0.9, 0.18, 0.36}, AirframeConfig{});
    vp.model = &model;
  }
};

State random_state(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  State x;
  x.p = Vec3(n(rng), n(rng), n(rng));
  x.q = quat::normalized(Vec4(n(rng), n(rng), n(rng), n(rng)));
  x.v = Vec3(8.0 + n(rng), n(rng), n(rng));
  x.w = 0.3 * Vec3(n(rng), n(rng), n(rng));
  return x;
}

Trajectory cruise_reference(const TrimResult& trim, double speed,
                            double t_f, int n) {
  Trajectory ref;
  ref.t_f = t_f;
  const double dt = t_f / (n - 1);
  for (int k = 0; k < n; ++k) {
    State xk = trim.state;
    xk.p = Vec3(speed * k * dt, 0.0, 0.0);
    ref.t.push_back(k * dt);
    ref.x.push_back(xk);
    ref.u.push_back(trim.input);
  }
  return ref;
}

}  // namespace

TEST_CASE("error state is zero at the reference and tracks small rotations") {
  std::mt19937_64 rng(11);
  const State x = random_state(rng);
  CHECK(error_state(x, x).norm() < 1e-14);

  State ref;
  State rotated;
  rotated.q = quat::from_axis_angle(Vec3(0, 0, 1), 0.02);
  const ErrVec e = error_state(rotated, ref);
  CHECK(std::abs(e[3]) < 1e-6);
  CHECK(std::abs(e[4]) < 1e-6);
  CHECK(std::abs(e[5] - 0.02) < 1e-6);
}

TEST_CASE("double-cover quaternions map to zero attitude error") {
  std::mt19937_64 rng(12);
  State ref = random_state(rng);
  State x = ref;
  x.q = -ref.q;
  CHECK(error_state(x, ref).norm() < 1e-12);
}

TEST_CASE("applying a perturbation and its inverse composes to zero error") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n(0.0, 0.3);
  for (int trial = 0; trial < 25; ++trial) {
    const State x = random_state(rng);
    ErrVec d;
    for (int i = 0; i < kErrDim; ++i) d[i] = n(rng);
    const State forward = retract(x, d);
    const State back = retract(forward, -d);
    CHECK(error_state(back, x).norm() < 1e-10);
  }
}

TEST_CASE("position rows of the linearisation equal the attitude matrix") {
  Rig rig;
  State x;
  x.p = Vec3(1.0, -2.0, 3.0);
  x.q = quat::from_axis_angle(Vec3(0.3, -0.5, 0.8).normalized(), 0.7);
  x.v = Vec3(9.0, 0.4, -0.3);
  x.w = Vec3(0.1, -0.2, 0.05);
  ControlInput u;
  u.thrust = 1.0;
  u.delta = Vec3(0.05, -0.02, 0.01);

  Mat12 A;
  Mat12x4 B;
  REQUIRE(linearize(x, u, rig.vp, A, B));
  const Mat3 expected = quat::rot_body_to_inertial(x.q);
  CHECK((A.block<3, 3>(0, 6) - expected).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("gravity tilt block matches the analytic Jacobian") {
  Rig rig;
  rig.vp.env.rho = 0.0;  // pure gravity, no aerodynamic forces
  State x;
  x.q = quat::from_axis_angle(Vec3(0.2, 0.9, -0.4).normalized(), 0.6);
  x.v = Vec3(4.0, -1.0, 2.0);
  ControlInput u;

  Mat12 A;
  Mat12x4 B;
  REQUIRE(linearize(x, u, rig.vp, A, B));
  const Vec3 g_body =
      quat::rot_inertial_to_body(x.q) * Vec3(0, 0, -rig.vp.env.g);
  CHECK((A.block<3, 3>(6, 3) - skew(g_body)).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("thrust column of the input Jacobian is one over mass") {
  Rig rig;
  const TrimResult trim = find_level_trim(rig.vp, 10.0, rig.lim);
  REQUIRE(trim.converged);

  Mat12 A;
  Mat12x4 B;
  REQUIRE(linearize(trim.state, trim.input, rig.vp, A, B));
  CHECK(std::abs(B(6, 0) - 1.0 / rig.model.mass) < 1e-9);
  CHECK(std::abs(B(7, 0)) < 1e-9);
  CHECK(std::abs(B(8, 0)) < 1e-9);
}

TEST_CASE("scalar Riccati solution matches the closed form") {
  MatX a(1, 1), b(1, 1), q(1, 1), r(1, 1);
  a << 0.0;
  b << 1.0;
  q << 1.0;
  r << 1.0;
  const CareResult res = solve_care(a, b, q, r);
  REQUIRE(res.ok);
  CHECK(std::abs(res.P(0, 0) - 1.0) < 1e-8);
  CHECK(std::abs(res.K(0, 0) - 1.0) < 1e-8);
  CHECK(res.abscissa < 0.0);
}

TEST_CASE("double integrator Riccati solution matches the closed form") {
  MatX a(2, 2), b(2, 1);
  a << 0, 1, 0, 0;
  b << 0, 1;
  const MatX q = MatX::Identity(2, 2);
  MatX r(1, 1);
  r << 1.0;
  const CareResult res = solve_care(a, b, q, r);
  REQUIRE(res.ok);
  const double s3 = std::sqrt(3.0);
  CHECK(std::abs(res.K(0, 0) - 1.0) < 1e-8);
  CHECK(std::abs(res.K(0, 1) - s3) < 1e-8);
  CHECK(std::abs(res.P(0, 0) - s3) < 1e-8);
  CHECK(std::abs(res.P(0, 1) - 1.0) < 1e-8);
  CHECK(std::abs(res.P(1, 1) - s3) < 1e-8);
  CHECK(res.residual <= 1e-8 * (1.0 + res.P.norm()));
}

TEST_CASE("zero state cost on a stable plant yields zero gain") {
  MatX a(2, 2), b(2, 1);
  a << -1.0, 0.3, 0.0, -2.0;
  b << 1.0, 1.0;
  const MatX q = MatX::Zero(2, 2);
  MatX r(1, 1);
  r << 1.0;
  const CareResult res = solve_care(a, b, q, r);
  REQUIRE(res.ok);
  CHECK(res.P.norm() < 1e-10);
  CHECK(res.K.norm() < 1e-10);
}

TEST_CASE("gain synthesis meets the residual contract in the flight regime") {
  Rig rig;
  const TrimResult trim = find_level_trim(rig.vp, 10.0, rig.lim);
  REQUIRE(trim.converged);
  const LqrWeights w;
  const GainResult g = synthesize_gains(trim.state, trim.input, rig.vp, w);
  REQUIRE(g.ok);
  CHECK(g.residual <= 1e-8 * (1.0 + g.P.norm()));
  CHECK(g.abscissa < 0.0);
  CHECK((g.P - g.P.transpose()).norm() < 1e-9);
  Eigen::SelfAdjointEigenSolver<Mat12> eig(g.P);
  CHECK(eig.eigenvalues().minCoeff() > -1e-8 * g.P.norm());
}

TEST_CASE("feedforward passes through at zero error and saturates off it") {
  Rig rig;
  const TrimResult trim = find_level_trim(rig.vp, 10.0, rig.lim);
  REQUIRE(trim.converged);
  const GainResult g =
      synthesize_gains(trim.state, trim.input, rig.vp, LqrWeights{});
  REQUIRE(g.ok);

  const ControlInput at_ref =
      lqr_control(trim.state, trim.state, trim.input, g, rig.lim);
  CHECK(at_ref.thrust == trim.input.thrust);
  CHECK((at_ref.delta - trim.input.delta).norm() == 0.0);

  State far = trim.state;
  far.p += Vec3(0.0, 0.0, 50.0);
  far.v += Vec3(0.0, 0.0, 8.0);
  const ControlInput saturated =
      lqr_control(far, trim.state, trim.input, g, rig.lim);
  const bool pinned =
      saturated.delta[0] == rig.lim.delta_max ||
      saturated.delta[0] == rig.lim.delta_min;
  CHECK(pinned);
}

TEST_CASE("altitude error commands a corrective elevator deflection") {
  Rig rig;
  const TrimResult trim = find_level_trim(rig.vp, 10.0, rig.lim);
  REQUIRE(trim.converged);
  const GainResult g =
      synthesize_gains(trim.state, trim.input, rig.vp, LqrWeights{});
  REQUIRE(g.ok);

  State above = trim.state;
  above.p += Vec3(0.0, 0.0, 0.5);
  const ControlInput cmd =
      lqr_control(above, trim.state, trim.input, g, rig.lim);
  // Positive elevator lifts the tail and pitches the nose down, which is the
  // corrective sense when flying above the reference line.
  CHECK(cmd.delta[0] > trim.input.delta[0]);
}

TEST_CASE("tracker regulates an initial offset on a straight cruise") {
  Rig rig;
  const double speed = 10.0;
  const TrimResult trim = find_level_trim(rig.vp, speed, rig.lim);
  REQUIRE(trim.converged);
  const Trajectory ref = cruise_reference(trim, speed, 6.0, 61);
  REQUIRE(ref.valid());

  const double physics_dt = 0.002;
  const int gain_every = 10;  // 20 ms re-linearisation cadence
  State x = trim.state;
  x.p += Vec3(0.0, 0.0, 0.5);
  ControlInput applied = trim.input;
  GainResult gains;
  const LqrWeights w;

  double worst_residual_margin = 0.0;
  double worst_abscissa = -1e9;
  const int steps = static_cast<int>(std::round(5.0 / physics_dt));
  for (int i = 0; i < steps; ++i) {
    if (i % gain_every == 0) {
      gains = synthesize_gains(x, applied, rig.vp, w);
      REQUIRE(gains.ok);
      worst_residual_margin = std::max(
          worst_residual_margin, gains.residual / (1.0 + gains.P.norm()));
      worst_abscissa = std::max(worst_abscissa, gains.abscissa);
    }
    const ControlInput cmd =
        tracker_command(ref, i * physics_dt, x, gains, rig.lim);
    applied = apply_actuator_dynamics(cmd, applied, physics_dt, rig.lim);
    x = integrate_step(x, applied, physics_dt, rig.vp);
  }
  CHECK(worst_residual_margin <= 1e-8);
  CHECK(worst_abscissa < 0.0);

  State ref_x;
  ControlInput ref_u;
  ref.sample(5.0, ref_x, ref_u);
  CHECK((x.p - ref_x.p).norm() < 0.1);
}

TEST_CASE("trajectory sampling interpolates and clamps") {
  Rig rig;
  const TrimResult trim = find_level_trim(rig.vp, 10.0, rig.lim);
  const Trajectory ref = cruise_reference(trim, 10.0, 4.0, 21);
  State xs;
  ControlInput us;
  ref.sample(0.3, xs, us);
  CHECK(std::abs(xs.p[0] - 3.0) < 1e-12);
  ref.sample(99.0, xs, us);
  CHECK(std::abs(xs.p[0] - 40.0) < 1e-12);
  ref.sample(-1.0, xs, us);
  CHECK(std::abs(xs.p[0]) < 1e-12);
}
