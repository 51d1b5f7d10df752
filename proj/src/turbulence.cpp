#include "uavco/turbulence.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <complex>
#include <stdexcept>

namespace uavco {

namespace {
constexpr double kPi = 3.14159265358979323846;

// Controllable canonical form for num/den polynomial coefficients given in
// ascending powers of s, denominator normalised to monic.
void canonical_form(const VecX& num, const VecX& den, MatX* a, VecX* b, VecX* c) {
  const int n = static_cast<int>(den.size()) - 1;
  const double lead = den[n];
  *a = MatX::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) (*a)(i, i + 1) = 1.0;
  for (int j = 0; j < n; ++j) (*a)(n - 1, j) = -den[j] / lead;
  *b = VecX::Zero(n);
  (*b)[n - 1] = 1.0;
  *c = VecX::Zero(n);
  for (int j = 0; j < static_cast<int>(num.size()) && j < n; ++j) {
    (*c)[j] = num[j] / lead;
  }
}

}  // namespace

VonKarmanFilter::AxisFilter VonKarmanFilter::make_axis(double sigma,
                                                       double length,
                                                       int order) const {
  const double t = length / speed_;  // time constant L/V
  VecX num, den;
  if (order == 1) {
    // longitudinal: first-order numerator over second-order denominator
    const double k = sigma * std::sqrt(2.0 * length / (kPi * speed_));
    num = VecX(2);
    num << k, k * 0.25 * t;
    den = VecX(3);
    den << 1.0, 1.357 * t, 0.1987 * t * t;
  } else {
    // lateral/vertical: second-order numerator over third-order denominator
    const double k = sigma * std::sqrt(length / (kPi * speed_));
    num = VecX(3);
    num << k, k * 2.7478 * t, k * 0.3398 * t * t;
    den = VecX(4);
    den << 1.0, 2.9958 * t, 1.9754 * t * t, 0.1539 * t * t * t;
  }

  AxisFilter f;
  VecX b;
  canonical_form(num, den, &f.a_cont, &b, &f.c);
  f.b_cont = b;

  // Van Loan zero-order hold.
  const int n = static_cast<int>(b.size());
  MatX m = MatX::Zero(n + 1, n + 1);
  m.topLeftCorner(n, n) = f.a_cont * dt_;
  m.topRightCorner(n, 1) = b * dt_;
  const MatX e = m.exp();
  f.ad = e.topLeftCorner(n, n);
  f.bd = e.topRightCorner(n, 1);
  f.state = VecX::Zero(n);
  return f;
}

VonKarmanFilter::VonKarmanFilter(const TurbulenceConfig& cfg, double dt,
                                 std::uint64_t seed)
    : rng_(seed), dt_(dt), speed_(cfg.airspeed) {
  if (dt <= 0.0 || cfg.airspeed <= 0.0 || cfg.length_u <= 0.0 ||
      cfg.length_v <= 0.0 || cfg.length_w <= 0.0) {
    throw std::invalid_argument("VonKarmanFilter: nonpositive dt/speed/length");
  }
  noise_scale_ = std::sqrt(kPi / dt);
  axes_[0] = make_axis(cfg.sigma_u, cfg.length_u, 1);
  axes_[1] = make_axis(cfg.sigma_v, cfg.length_v, 2);
  axes_[2] = make_axis(cfg.sigma_w, cfg.length_w, 2);
}

Vec3 VonKarmanFilter::step() {
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    const double eta = normal_(rng_) * noise_scale_;
    axes_[i].state = axes_[i].ad * axes_[i].state + axes_[i].bd * eta;
    out[i] = axes_[i].c.dot(axes_[i].state);
  }
  return out;
}

double VonKarmanFilter::stationary_variance(int axis) const {
  const AxisFilter& f = axes_[axis];
  const int n = static_cast<int>(f.state.size());
  const MatX q = (kPi / dt_) * (f.bd * f.bd.transpose());
  // vec(P) = (I - Ad (x) Ad)^-1 vec(Q)
  const int n2 = n * n;
  MatX kron = MatX::Zero(n2, n2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      kron.block(i * n, j * n, n, n) = f.ad(i, j) * f.ad;
  const MatX lhs = MatX::Identity(n2, n2) - kron;
  Eigen::Map<const VecX> qv(q.data(), n2);
  VecX pv = lhs.partialPivLu().solve(qv);
  Eigen::Map<const MatX> p(pv.data(), n, n);
  return f.c.dot(p * f.c);
}

double VonKarmanFilter::output_psd(int axis, double omega) const {
  const AxisFilter& f = axes_[axis];
  const int n = static_cast<int>(f.state.size());
  using Cd = std::complex<double>;
  Eigen::MatrixXcd m = Cd(0.0, omega) * Eigen::MatrixXcd::Identity(n, n) -
                       f.a_cont.cast<Cd>();
  const Eigen::VectorXcd x = m.partialPivLu().solve(f.b_cont.cast<Cd>());
  const Cd h = f.c.cast<Cd>().dot(x);
  return kPi * std::norm(h);  // drive PSD is pi
}

}  // namespace uavco
