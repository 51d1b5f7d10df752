#include "uavco/trajectory.hpp"

#include <algorithm>
#include <cmath>

#include "uavco/quat.hpp"

namespace uavco {

void Trajectory::sample(double time, State& xs, ControlInput& us) const {
  const int n = knots();
  if (n == 1) {
    xs = x[0];
    us = u[0];
    return;
  }
  const double step = dt();
  const double s = std::clamp(time, 0.0, t_f) / step;
  int k = std::min(static_cast<int>(s), n - 2);
  const double a = std::clamp(s - k, 0.0, 1.0);

  xs.p = (1.0 - a) * x[k].p + a * x[k + 1].p;
  xs.q = quat::slerp(x[k].q, x[k + 1].q, a);
  xs.v = (1.0 - a) * x[k].v + a * x[k + 1].v;
  xs.w = (1.0 - a) * x[k].w + a * x[k + 1].w;
  us.thrust = (1.0 - a) * u[k].thrust + a * u[k + 1].thrust;
  us.delta = (1.0 - a) * u[k].delta + a * u[k + 1].delta;
}

bool Trajectory::valid() const {
  const int n = knots();
  if (n < 2 || x.size() != t.size() || u.size() != t.size()) return false;
  if (!(t_f > 0.0) || !std::isfinite(t_f)) return false;
  const double step = t_f / (n - 1);
  for (int k = 0; k < n; ++k) {
    if (std::abs(t[k] - k * step) > 1e-12 * std::max(1.0, t_f)) return false;
    // Collocated trajectories carry slightly sub-unit quaternions where the
    // body spins fast (the trapezoidal defects conserve
    // |q|^2 (1 + (dt |w| / 4)^2), so |q| sags as |w| grows); 1e-2 admits
    // that sag while still flagging genuinely corrupt data.  Consumers that
    // need exact unit quaternions normalise at the point of use.
    if (std::abs(x[k].q.norm() - 1.0) > 1e-2) return false;
    if (!x[k].pack().allFinite() || !u[k].pack().allFinite()) return false;
  }
  return true;
}

}  // namespace uavco
