#pragma once

#include <Eigen/Dense>

namespace uavco {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr int kStateDim = 13;
inline constexpr int kInputDim = 4;
inline constexpr int kErrDim = 12;

using Vec13 = Eigen::Matrix<double, kStateDim, 1>;
using VecU = Eigen::Matrix<double, kInputDim, 1>;

// Rigid-body state: inertial position, attitude quaternion (scalar first,
// body->inertial), body-frame linear velocity, body-frame angular rate.
struct State {
  Vec3 p = Vec3::Zero();
  Vec4 q = Vec4(1, 0, 0, 0);
  Vec3 v = Vec3::Zero();
  Vec3 w = Vec3::Zero();

  Vec13 pack() const {
    Vec13 x;
    x.segment<3>(0) = p;
    x.segment<4>(3) = q;
    x.segment<3>(7) = v;
    x.segment<3>(10) = w;
    return x;
  }
  static State unpack(const Vec13& x) {
    State s;
    s.p = x.segment<3>(0);
    s.q = x.segment<4>(3);
    s.v = x.segment<3>(7);
    s.w = x.segment<3>(10);
    return s;
  }
};

// Control input: thrust along body x through the CG, then surface deflections
// (elevator, aileron, rudder) in radians.
struct ControlInput {
  double thrust = 0.0;
  Vec3 delta = Vec3::Zero();

  VecU pack() const { return VecU(thrust, delta[0], delta[1], delta[2]); }
  static ControlInput unpack(const VecU& u) {
    return ControlInput{u[0], Vec3(u[1], u[2], u[3])};
  }
};

struct ActuatorLimits {
  double delta_min = -0.4363323129985824;  // -25 deg
  double delta_max = 0.4363323129985824;   // +25 deg
  double rate_max = 8.0;                   // rad/s
  double thrust_min = 0.0;                 // N
  double thrust_max = 5.0;                 // N
};

struct Environment {
  double rho = 1.225;  // kg/m^3
  double g = 9.81;     // m/s^2
};

}  // namespace uavco
