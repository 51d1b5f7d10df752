#pragma once

#include <vector>

#include "uavco/types.hpp"

namespace uavco {

// A planned trajectory on a uniform knot grid.  States and inputs are stored
// per knot; sampling between knots interpolates linearly (quaternions are
// slerped and renormalised).
struct Trajectory {
  std::vector<double> t;
  std::vector<State> x;
  std::vector<ControlInput> u;
  double t_f = 0.0;

  int knots() const { return static_cast<int>(t.size()); }
  double dt() const { return knots() > 1 ? t_f / (knots() - 1) : 0.0; }

  // Linear / slerp interpolation at `time`, clamped to [0, t_f].
  void sample(double time, State& xs, ControlInput& us) const;

  // Checks consistent lengths, a uniform time grid and near-unit quaternions.
  bool valid() const;
};

}  // namespace uavco
