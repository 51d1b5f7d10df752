#pragma once

#include <Eigen/Dense>
#include <cmath>

// Quaternion helpers on scalar-first 4-vectors (w, x, y, z), Hamilton product
// convention.  The attitude quaternion maps body-frame vectors to the inertial
// frame: v_I = R_bi(q) v_B.

namespace uavco::quat {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

inline Vec4 identity() { return Vec4(1.0, 0.0, 0.0, 0.0); }

inline Vec4 conjugate(const Vec4& q) { return Vec4(q[0], -q[1], -q[2], -q[3]); }

inline Vec4 multiply(const Vec4& a, const Vec4& b) {
  return Vec4(a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
              a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
              a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
              a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]);
}

inline Vec4 normalized(const Vec4& q) {
  const double n = q.norm();
  return n > 0.0 ? Vec4(q / n) : identity();
}

// Body-to-inertial rotation matrix of a unit quaternion.
inline Mat3 rot_body_to_inertial(const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return R;
}

// Inertial-to-body rotation matrix (transpose of the above).
inline Mat3 rot_inertial_to_body(const Vec4& q) {
  return rot_body_to_inertial(q).transpose();
}

inline Vec4 from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n < 1e-300) return identity();
  const double h = 0.5 * angle;
  Vec4 q;
  q[0] = std::cos(h);
  q.tail<3>() = (std::sin(h) / n) * axis;
  return q;
}

// Exponential chart: small rotation vector -> unit quaternion.
inline Vec4 exp_map(const Vec3& phi) {
  const double a = phi.norm();
  Vec4 q;
  if (a < 1e-12) {
    q[0] = 1.0 - a * a / 8.0;
    q.tail<3>() = 0.5 * phi;
  } else {
    q[0] = std::cos(0.5 * a);
    q.tail<3>() = (std::sin(0.5 * a) / a) * phi;
  }
  return q.normalized();
}

// Logarithmic chart: unit quaternion -> rotation vector (inverse of exp_map
// on the shortest-path branch).
inline Vec3 log_map(const Vec4& q) {
  const Vec4 u = q[0] < 0.0 ? Vec4(-q) : q;
  const double vn = u.tail<3>().norm();
  if (vn < 1e-12) {
    return 2.0 * u.tail<3>() / std::max(u[0], 1e-300);
  }
  const double angle = 2.0 * std::atan2(vn, u[0]);
  return (angle / vn) * u.tail<3>();
}

// Shortest-path spherical interpolation, t in [0,1].
inline Vec4 slerp(const Vec4& a, Vec4 b, double t) {
  double d = a.dot(b);
  if (d < 0.0) {
    b = -b;
    d = -d;
  }
  if (d > 1.0 - 1e-12) {
    return normalized(a + t * (b - a));
  }
  const double th = std::acos(std::min(1.0, d));
  const double s = std::sin(th);
  return normalized((std::sin((1.0 - t) * th) / s) * a +
                    (std::sin(t * th) / s) * b);
}

// Quaternion derivative under body angular rate: qdot = 0.5 q (x) [0, w].
inline Vec4 derivative(const Vec4& q, const Vec3& omega) {
  return 0.5 * multiply(q, Vec4(0.0, omega[0], omega[1], omega[2]));
}

}  // namespace uavco::quat
