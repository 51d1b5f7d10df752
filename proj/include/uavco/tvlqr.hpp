#pragma once

#include "uavco/dynamics.hpp"
#include "uavco/trajectory.hpp"
#include "uavco/types.hpp"

namespace uavco {

using ErrVec = Eigen::Matrix<double, kErrDim, 1>;
using Mat12 = Eigen::Matrix<double, kErrDim, kErrDim>;
using Mat12x4 = Eigen::Matrix<double, kErrDim, kInputDim>;
using Mat4x12 = Eigen::Matrix<double, kInputDim, kErrDim>;

// Quadratic tracking weights on the 12-dim error state
// (position, attitude, linear velocity, angular velocity).
struct LqrWeights {
  Mat12 Q = (ErrVec() << 10, 10, 10, 5, 5, 5, 1, 1, 1, 1, 1, 1)
                .finished()
                .asDiagonal();
  Eigen::Matrix4d R = Vec4(0.1, 1, 1, 1).asDiagonal();
};

// Multiplicative error between a state and its reference: position and
// velocity errors by subtraction, attitude error theta = 2*sgn(qe_w)*qe_vec
// of the relative quaternion qe = conj(q_ref) (x) q, with sgn(0) := 1.
ErrVec error_state(const State& x, const State& ref);

// Inverse chart: applies a 12-dim tangent perturbation to a base state
// (quaternion block through the exponential map).
State retract(const State& base, const ErrVec& dx);

// Central-difference Jacobians of the error-state dynamics about (x, u),
// with the quaternion block reduced to the 3-dim tangent at x.  Returns
// false if any entry is non-finite.
bool linearize(const State& x, const ControlInput& u, const VehicleParams& vp,
               Mat12& A, Mat12x4& B);

// Continuous algebraic Riccati solution for generic (A, B, Q, R): matrix
// sign-function iteration on the Hamiltonian with determinant scaling,
// polished by Newton-Kleinman steps (Kronecker Lyapunov solves) until
// ||A'P + PA - PBR^-1B'P + Q||_F <= 1e-8 (1 + ||P||_F).
struct CareResult {
  MatX P;
  MatX K;  // R^-1 B' P
  double residual = 0.0;
  double abscissa = 0.0;  // max real part of eig(A - BK)
  bool ok = false;
};
CareResult solve_care(const MatX& A, const MatX& B, const MatX& Q,
                      const MatX& R);

// One gain synthesis at a linearisation point of the tracked system.
struct GainResult {
  Mat4x12 K = Mat4x12::Zero();
  Mat12 P = Mat12::Zero();
  Mat12 A = Mat12::Zero();
  Mat12x4 B = Mat12x4::Zero();
  double residual = 0.0;
  double abscissa = 0.0;
  bool ok = false;
};
GainResult synthesize_gains(const State& x, const ControlInput& u,
                            const VehicleParams& vp, const LqrWeights& w);

// Feedforward-plus-feedback law u = u_ref - K err, saturated to the limits.
ControlInput lqr_control(const State& x, const State& ref_x,
                         const ControlInput& ref_u, const GainResult& gains,
                         const ActuatorLimits& lim);

// Feedback evaluation against a reference trajectory: samples (x*, u*) at
// time t and applies the feedforward-plus-feedback law with the given gains.
// Gains are refreshed separately at the re-linearisation cadence (they are
// held between syntheses, while the control law itself is evaluated at the
// integration rate -- holding the additive correction constant for a full
// gain epoch destabilises the fastest closed-loop modes).
ControlInput tracker_command(const Trajectory& ref, double t, const State& x,
                             const GainResult& gains,
                             const ActuatorLimits& lim);

}  // namespace uavco
