#pragma once

#include <cstdint>
#include <random>

#include "uavco/types.hpp"

namespace uavco {

// Continuous gust field parameters (certification-handbook Von Karman form).
struct TurbulenceConfig {
  double sigma_u = 1.5;   // m/s, along-track intensity
  double sigma_v = 1.5;   // m/s, lateral
  double sigma_w = 1.5;   // m/s, vertical
  double length_u = 200.0;  // m
  double length_v = 100.0;  // m
  double length_w = 100.0;  // m
  double airspeed = 10.0;   // m/s, vehicle speed through the frozen field
};

// Rational shaping filters driven by white noise, discretised with a
// zero-order hold at the integration step.  Outputs are gust velocity
// components in the inertial frame (frozen-field simplification: the filter
// axes ride with the nominal flight direction).
class VonKarmanFilter {
 public:
  VonKarmanFilter() = default;
  VonKarmanFilter(const TurbulenceConfig& cfg, double dt, std::uint64_t seed);

  // Advance one step and return the gust vector (m/s).
  Vec3 step();

  // Analytic stationary output variance of the discretised filter, axis in
  // {0,1,2}; the contract is agreement with sigma^2 to within a few percent.
  double stationary_variance(int axis) const;

  // Squared magnitude of the discrete filter frequency response at a given
  // angular frequency (rad/s), including the white-noise scaling, i.e. the
  // two-sided output PSD.
  double output_psd(int axis, double omega) const;

  double dt() const { return dt_; }

 private:
  struct AxisFilter {
    MatX ad;      // discrete state transition
    VecX bd;      // discrete input vector
    VecX c;       // output row
    VecX state;
    MatX a_cont;  // continuous-time pair kept for PSD queries
    VecX b_cont;
  };

  AxisFilter make_axis(double sigma, double length, int order) const;

  AxisFilter axes_[3];
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  double dt_ = 0.0;
  double noise_scale_ = 0.0;  // sqrt(pi / dt): unit-PSD drive convention
  double speed_ = 0.0;
};

}  // namespace uavco
