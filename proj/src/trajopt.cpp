#include "uavco/trajopt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/SparseCholesky>

#include "uavco/quat.hpp"

namespace uavco {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Keeps the airspeed factor of the power term differentiable through v = 0.
constexpr double kSpeedSmoothing = 1e-10;

double smooth_speed(const Vec3& v) {
  return std::sqrt(v.squaredNorm() + kSpeedSmoothing);
}

double knot_power(double thrust, const Vec3& v, const Vec3& delta,
                  const CostWeights& w) {
  return thrust * smooth_speed(v) / w.eta_p + w.k_s * delta.squaredNorm();
}

SpMat diagonal_matrix(const VecX& d) {
  SpMat m(static_cast<int>(d.size()), static_cast<int>(d.size()));
  m.reserve(Eigen::VectorXi::Constant(static_cast<int>(d.size()), 1));
  for (int i = 0; i < d.size(); ++i) m.insert(i, i) = d[i];
  m.makeCompressed();
  return m;
}

}  // namespace

double cost(const Trajectory& traj, const CostWeights& w) {
  const int n = traj.knots();
  if (n < 2) return w.omega1 * traj.t_f;
  double energy = 0.0;
  for (int k = 0; k < n; ++k) {
    energy += knot_power(traj.u[k].thrust, traj.x[k].v, traj.u[k].delta, w);
  }
  return w.omega1 * traj.t_f + w.omega2 * energy * traj.dt();
}

Vec13 defect(const State& xk, const State& xk1, const ControlInput& uk,
             const ControlInput& uk1, double dt, const VehicleParams& vp) {
  const Vec13 fk = state_derivative(xk, uk, vp);
  const Vec13 fk1 = state_derivative(xk1, uk1, vp);
  return xk1.pack() - xk.pack() - 0.5 * dt * (fk + fk1);
}

double obstacle_clearance(const Vec3& p, const Obstacle& obs, double span) {
  const double dx = p[0] - obs.center[0];
  const double dy = p[1] - obs.center[1];
  return std::hypot(dx, dy) - (obs.radius + 0.5 * span);
}

Trajectory initial_guess(const Mission& mission, const VehicleParams& vp) {
  const int n = mission.knots;
  const Vec3 p0 = mission.x0.p;
  const double speed = std::max(mission.x0.v.norm(), 0.1);
  const double path = (mission.p_N - p0).norm();
  const double t_f = std::clamp(path / speed, mission.t_f_min, mission.t_f_max);

  const Vec4 q0 = quat::normalized(mission.x0.q);
  const Vec4 q_rel =
      quat::multiply(quat::conjugate(q0), quat::normalized(mission.q_N));
  const Vec3 rotvec = quat::log_map(q_rel);

  const TrimResult trim = find_level_trim(vp, speed, mission.limits);
  const double thrust = std::clamp(
      trim.input.thrust, mission.limits.thrust_min, mission.limits.thrust_max);

  Trajectory traj;
  traj.t_f = t_f;
  traj.t.resize(n);
  traj.x.resize(n);
  traj.u.resize(n);
  const double step = t_f / (n - 1);
  for (int k = 0; k < n; ++k) {
    const double s = static_cast<double>(k) / (n - 1);
    traj.t[k] = k * step;
    State& x = traj.x[k];
    x.p = p0 + s * (mission.p_N - p0);
    x.q = quat::normalized(quat::multiply(q0, quat::exp_map(s * rotvec)));
    x.v = mission.x0.v;
    x.w = rotvec / t_f;
    traj.u[k].thrust = thrust;
    traj.u[k].delta.setZero();
  }
  return traj;
}

NlpProblem::NlpProblem(const Mission& mission, const VehicleParams& vp,
                       const SolverSettings& settings)
    : mission_(mission), vp_(vp), settings_(settings), n_(mission.knots) {}

NlpProblem transcribe(const Mission& mission, const VehicleParams& vp,
                      const SolverSettings& settings) {
  if (vp.model == nullptr) {
    throw std::invalid_argument("transcribe: vehicle model missing");
  }
  if (mission.knots < 10) {
    throw std::invalid_argument("transcribe: need at least 10 knots");
  }
  if (!(mission.t_f_min > 0.0) || !(mission.t_f_max > mission.t_f_min)) {
    throw std::invalid_argument(
        "transcribe: need 0 < t_f lower bound < t_f upper bound");
  }
  const double span = vp.model->wing_span;
  for (const Obstacle& obs : mission.obstacles) {
    if (!(obs.radius > 0.0)) {
      throw std::invalid_argument("transcribe: obstacle radius must be > 0");
    }
    if (obstacle_clearance(mission.p_N, obs, span) <= 0.0) {
      throw std::invalid_argument(
          "transcribe: terminal position lies inside an obstacle");
    }
    if (obstacle_clearance(mission.x0.p, obs, span) <= 0.0) {
      throw std::invalid_argument(
          "transcribe: initial position lies inside an obstacle");
    }
  }
  return NlpProblem(mission, vp, settings);
}

VecX NlpProblem::pack(const Trajectory& traj) const {
  if (traj.knots() != n_) {
    throw std::invalid_argument("pack: trajectory knot count mismatch");
  }
  VecX z(num_vars());
  for (int k = 0; k < n_; ++k) {
    z.segment<13>(xi(k)) = traj.x[k].pack();
    z.segment<4>(ui(k)) = traj.u[k].pack();
  }
  z[ti()] = traj.t_f;
  return z;
}

Trajectory NlpProblem::unpack(const VecX& z) const {
  Trajectory traj;
  traj.t_f = z[ti()];
  traj.t.resize(n_);
  traj.x.resize(n_);
  traj.u.resize(n_);
  const double step = traj.t_f / (n_ - 1);
  for (int k = 0; k < n_; ++k) {
    traj.t[k] = k * step;
    traj.x[k] = State::unpack(z.segment<13>(xi(k)));
    traj.u[k] = ControlInput::unpack(z.segment<4>(ui(k)));
  }
  return traj;
}

double NlpProblem::objective(const VecX& z) const {
  const CostWeights& w = mission_.weights;
  const double t_f = z[ti()];
  double energy = 0.0;
  for (int k = 0; k < n_; ++k) {
    energy += knot_power(z[ui(k)], z.segment<3>(xi(k) + 7),
                         z.segment<3>(ui(k) + 1), w);
  }
  return w.omega1 * t_f + w.omega2 * energy * (t_f / (n_ - 1));
}

void NlpProblem::objective_gradient(const VecX& z, VecX& grad) const {
  const CostWeights& w = mission_.weights;
  const double t_f = z[ti()];
  const double dt = t_f / (n_ - 1);
  grad.setZero(num_vars());
  double energy = 0.0;
  for (int k = 0; k < n_; ++k) {
    const double thrust = z[ui(k)];
    const Vec3 v = z.segment<3>(xi(k) + 7);
    const Vec3 delta = z.segment<3>(ui(k) + 1);
    const double speed = smooth_speed(v);
    energy += knot_power(thrust, v, delta, w);
    grad[ui(k)] = w.omega2 * dt * speed / w.eta_p;
    grad.segment<3>(xi(k) + 7) =
        w.omega2 * dt * (thrust / w.eta_p) * (v / speed);
    grad.segment<3>(ui(k) + 1) = w.omega2 * dt * 2.0 * w.k_s * delta;
  }
  grad[ti()] = w.omega1 + w.omega2 * energy / (n_ - 1);
}

void NlpProblem::objective_hessian(const VecX& z,
                                   Eigen::SparseMatrix<double>& H) const {
  const CostWeights& w = mission_.weights;
  const double t_f = z[ti()];
  const double dt = t_f / (n_ - 1);
  std::vector<Triplet> trip;
  trip.reserve(static_cast<size_t>(n_) * 36);
  for (int k = 0; k < n_; ++k) {
    const int vt = ui(k);          // thrust index
    const int vv = xi(k) + 7;      // first velocity index
    const int vd = ui(k) + 1;      // first deflection index
    const double thrust = z[vt];
    const Vec3 v = z.segment<3>(vv);
    const Vec3 delta = z.segment<3>(vd);
    const double speed = smooth_speed(v);
    const Vec3 dspeed = v / speed;
    // d2/dv2 of |v| (smoothed): (I - v v^T / V^2) / V.
    const Mat3 d2speed =
        (Mat3::Identity() - dspeed * dspeed.transpose()) / speed;

    const double c_knot = w.omega2 * dt;
    for (int i = 0; i < 3; ++i) {
      trip.emplace_back(vt, vv + i, c_knot * dspeed[i] / w.eta_p);
      trip.emplace_back(vv + i, vt, c_knot * dspeed[i] / w.eta_p);
      for (int j = 0; j < 3; ++j) {
        trip.emplace_back(vv + i, vv + j,
                          c_knot * (thrust / w.eta_p) * d2speed(i, j));
      }
      trip.emplace_back(vd + i, vd + i, c_knot * 2.0 * w.k_s);
    }

    const double c_tf = w.omega2 / (n_ - 1);
    trip.emplace_back(ti(), vt, c_tf * speed / w.eta_p);
    trip.emplace_back(vt, ti(), c_tf * speed / w.eta_p);
    for (int i = 0; i < 3; ++i) {
      trip.emplace_back(ti(), vv + i, c_tf * (thrust / w.eta_p) * dspeed[i]);
      trip.emplace_back(vv + i, ti(), c_tf * (thrust / w.eta_p) * dspeed[i]);
      trip.emplace_back(ti(), vd + i, c_tf * 2.0 * w.k_s * delta[i]);
      trip.emplace_back(vd + i, ti(), c_tf * 2.0 * w.k_s * delta[i]);
    }
  }
  H.resize(num_vars(), num_vars());
  H.setFromTriplets(trip.begin(), trip.end());
}

void NlpProblem::equalities(const VecX& z, VecX& c) const {
  c.resize(num_equalities());
  const double t_f = z[ti()];
  const double dt = t_f / (n_ - 1);
  std::vector<Vec13> f(n_);
  for (int k = 0; k < n_; ++k) {
    f[k] = state_derivative(State::unpack(z.segment<13>(xi(k))),
                            ControlInput::unpack(z.segment<4>(ui(k))), vp_);
  }
  for (int k = 0; k + 1 < n_; ++k) {
    c.segment<13>(13 * k) = z.segment<13>(xi(k + 1)) - z.segment<13>(xi(k)) -
                            0.5 * dt * (f[k] + f[k + 1]);
  }
  int r = 13 * (n_ - 1);
  c.segment<13>(r) = z.segment<13>(xi(0)) - mission_.x0.pack();
  r += 13;
  c.segment<3>(r) = z.segment<3>(xi(n_ - 1)) - mission_.p_N;
  r += 3;
  c.segment<4>(r) = z.segment<4>(xi(n_ - 1) + 3) - mission_.q_N;
  r += 4;
  c.segment<3>(r) = z.segment<3>(xi(n_ - 1) + 7) - mission_.v_bN;
}

void NlpProblem::inequalities(const VecX& z, VecX& g) const {
  g.resize(num_inequalities());
  const ActuatorLimits& lim = mission_.limits;
  const int nobs = num_obstacles();
  const double t_f = z[ti()];
  const double dt = t_f / (n_ - 1);
  const double span = vp_.model->wing_span;
  int r = 0;
  for (int k = 0; k < n_; ++k) {
    const double thrust = z[ui(k)];
    g[r++] = thrust - lim.thrust_min;
    g[r++] = lim.thrust_max - thrust;
    for (int i = 0; i < 3; ++i) {
      const double d = z[ui(k) + 1 + i];
      g[r++] = d - lim.delta_min;
      g[r++] = lim.delta_max - d;
    }
    const double qq = z.segment<4>(xi(k) + 3).squaredNorm();
    g[r++] = qq - (1.0 - settings_.quat_band);
    g[r++] = (1.0 + settings_.quat_band) - qq;
    const Vec3 p = z.segment<3>(xi(k));
    for (int j = 0; j < nobs; ++j) {
      g[r++] = obstacle_clearance(p, mission_.obstacles[j], span);
    }
  }
  for (int k = 0; k + 1 < n_; ++k) {
    for (int i = 0; i < 3; ++i) {
      const double diff = z[ui(k + 1) + 1 + i] - z[ui(k) + 1 + i];
      g[r++] = lim.rate_max * dt - diff;
      g[r++] = lim.rate_max * dt + diff;
    }
  }
  g[r++] = t_f - mission_.t_f_min;
  g[r++] = mission_.t_f_max - t_f;
}

void NlpProblem::dynamics_jacobian(const Vec13& x, const VecU& u,
                                   Eigen::Matrix<double, 13, 13>& A,
                                   Eigen::Matrix<double, 13, 4>& B) const {
  const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
  const ControlInput uc = ControlInput::unpack(u);
  for (int j = 0; j < 13; ++j) {
    const double h = h0 * std::max(1.0, std::abs(x[j]));
    Vec13 xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    A.col(j) = (state_derivative(State::unpack(xp), uc, vp_) -
                state_derivative(State::unpack(xm), uc, vp_)) /
               (2.0 * h);
  }
  const State xc = State::unpack(x);
  for (int j = 0; j < 4; ++j) {
    const double h = h0 * std::max(1.0, std::abs(u[j]));
    VecU up = u, um = u;
    up[j] += h;
    um[j] -= h;
    B.col(j) = (state_derivative(xc, ControlInput::unpack(up), vp_) -
                state_derivative(xc, ControlInput::unpack(um), vp_)) /
               (2.0 * h);
  }
}

void NlpProblem::constraint_jacobians(const VecX& z,
                                      Eigen::SparseMatrix<double>& Jc,
                                      Eigen::SparseMatrix<double>& Jg) const {
  const double t_f = z[ti()];
  const double dt = t_f / (n_ - 1);
  const int nobs = num_obstacles();

  std::vector<Vec13> f(n_);
  std::vector<Eigen::Matrix<double, 13, 13>> A(n_);
  std::vector<Eigen::Matrix<double, 13, 4>> B(n_);
  for (int k = 0; k < n_; ++k) {
    const Vec13 xk = z.segment<13>(xi(k));
    const VecU uk = z.segment<4>(ui(k));
    f[k] = state_derivative(State::unpack(xk), ControlInput::unpack(uk), vp_);
    dynamics_jacobian(xk, uk, A[k], B[k]);
  }

  std::vector<Triplet> tc;
  tc.reserve(static_cast<size_t>(n_ - 1) * 13 * 35 + 23);
  for (int k = 0; k + 1 < n_; ++k) {
    const int row = 13 * k;
    for (int r = 0; r < 13; ++r) {
      for (int j = 0; j < 13; ++j) {
        const double eye = (r == j) ? 1.0 : 0.0;
        tc.emplace_back(row + r, xi(k) + j, -eye - 0.5 * dt * A[k](r, j));
        tc.emplace_back(row + r, xi(k + 1) + j, eye - 0.5 * dt * A[k + 1](r, j));
      }
      for (int j = 0; j < 4; ++j) {
        tc.emplace_back(row + r, ui(k) + j, -0.5 * dt * B[k](r, j));
        tc.emplace_back(row + r, ui(k + 1) + j, -0.5 * dt * B[k + 1](r, j));
      }
      tc.emplace_back(row + r, ti(),
                      -(f[k][r] + f[k + 1][r]) / (2.0 * (n_ - 1)));
    }
  }
  int row = 13 * (n_ - 1);
  for (int r = 0; r < 13; ++r) tc.emplace_back(row + r, xi(0) + r, 1.0);
  row += 13;
  for (int r = 0; r < 3; ++r) tc.emplace_back(row + r, xi(n_ - 1) + r, 1.0);
  row += 3;
  for (int r = 0; r < 4; ++r) tc.emplace_back(row + r, xi(n_ - 1) + 3 + r, 1.0);
  row += 4;
  for (int r = 0; r < 3; ++r) tc.emplace_back(row + r, xi(n_ - 1) + 7 + r, 1.0);

  Jc.resize(num_equalities(), num_vars());
  Jc.setFromTriplets(tc.begin(), tc.end());

  std::vector<Triplet> tg;
  tg.reserve(static_cast<size_t>(n_) * (16 + 2 * nobs) +
             static_cast<size_t>(n_ - 1) * 18 + 2);
  int r2 = 0;
  for (int k = 0; k < n_; ++k) {
    tg.emplace_back(r2++, ui(k), 1.0);
    tg.emplace_back(r2++, ui(k), -1.0);
    for (int i = 0; i < 3; ++i) {
      tg.emplace_back(r2++, ui(k) + 1 + i, 1.0);
      tg.emplace_back(r2++, ui(k) + 1 + i, -1.0);
    }
    const Vec4 q = z.segment<4>(xi(k) + 3);
    for (int i = 0; i < 4; ++i) {
      tg.emplace_back(r2, xi(k) + 3 + i, 2.0 * q[i]);
    }
    ++r2;
    for (int i = 0; i < 4; ++i) {
      tg.emplace_back(r2, xi(k) + 3 + i, -2.0 * q[i]);
    }
    ++r2;
    const Vec3 p = z.segment<3>(xi(k));
    for (int j = 0; j < nobs; ++j) {
      const Obstacle& obs = mission_.obstacles[j];
      const double dx = p[0] - obs.center[0];
      const double dy = p[1] - obs.center[1];
      const double h = std::hypot(dx, dy);
      if (h > 1e-12) {
        tg.emplace_back(r2, xi(k) + 0, dx / h);
        tg.emplace_back(r2, xi(k) + 1, dy / h);
      }
      ++r2;
    }
  }
  const double rate_tf = mission_.limits.rate_max / (n_ - 1);
  for (int k = 0; k + 1 < n_; ++k) {
    for (int i = 0; i < 3; ++i) {
      tg.emplace_back(r2, ui(k) + 1 + i, 1.0);
      tg.emplace_back(r2, ui(k + 1) + 1 + i, -1.0);
      tg.emplace_back(r2, ti(), rate_tf);
      ++r2;
      tg.emplace_back(r2, ui(k) + 1 + i, -1.0);
      tg.emplace_back(r2, ui(k + 1) + 1 + i, 1.0);
      tg.emplace_back(r2, ti(), rate_tf);
      ++r2;
    }
  }
  tg.emplace_back(r2++, ti(), 1.0);
  tg.emplace_back(r2++, ti(), -1.0);

  Jg.resize(num_inequalities(), num_vars());
  Jg.setFromTriplets(tg.begin(), tg.end());
}

MatX NlpProblem::dense_equality_jacobian(const VecX& z) const {
  SpMat Jc, Jg;
  constraint_jacobians(z, Jc, Jg);
  return MatX(Jc);
}

MatX NlpProblem::dense_inequality_jacobian(const VecX& z) const {
  SpMat Jc, Jg;
  constraint_jacobians(z, Jc, Jg);
  return MatX(Jg);
}

namespace {

// The straight-line seed threads cylinder axes head-on; there the clearance
// gradient has no lateral component and the two detour sides are exactly
// symmetric, so descent steps stay on the infeasible axis.  Shift offending
// knots sideways (keeping whichever side the seed already leans toward,
// positive y of the cylinder otherwise) before the solve.
void shift_knots_clear_of_obstacles(const NlpProblem& prob, VecX& z) {
  const Mission& mission = prob.mission();
  if (mission.obstacles.empty()) return;
  const double span = prob.vehicle().model->wing_span;
  const double margin = 0.25;
  for (int k = 0; k < prob.num_knots(); ++k) {
    Vec3 p = z.segment<3>(prob.xi(k));
    for (const Obstacle& obs : mission.obstacles) {
      const double keep_out = obs.radius + 0.5 * span + margin;
      const double dx = p[0] - obs.center[0];
      const double dy = p[1] - obs.center[1];
      if (dx * dx + dy * dy >= keep_out * keep_out) continue;
      const double side = dy < -1e-9 ? -1.0 : 1.0;
      const double y_out =
          std::sqrt(std::max(keep_out * keep_out - dx * dx, 0.0));
      p[1] = obs.center[1] + side * y_out;
    }
    z.segment<3>(prob.xi(k)) = p;
  }
}

// Augmented-Lagrangian outer loop around a damped Gauss-Newton inner
// minimiser.  Equalities carry explicit multipliers; inequalities use the
// squared-hinge form whose multiplier estimate is a = max(0, nu - mu g).
//
// The boundary equalities pin whole decision-vector components through
// identity Jacobian blocks, so the solver eliminates them up front: those
// components are frozen at their prescribed values and the corresponding
// rows dropped.  Any reduced-space stationary point extends to a full KKT
// point (the dropped rows' multipliers absorb whatever gradient remains on
// the frozen components).  Keeping the rows in the optimisation instead
// leaves a telescoping near-null direction through the defect chain --
// uniform shifts of one state component across all knots -- that slows the
// multiplier iteration to a crawl.
struct AugmentedLagrangianSolver {
  const NlpProblem& prob;
  const SolverSettings& st;

  int m_red;       // equality rows kept (the defect block)
  SpMat select_f;  // num_vars x num_free column selector
  SpMat select_e;  // as select_f, minus the terminal rate when it is pinned
  SpMat select_d;  // m_red x num_equalities defect-row selector

  VecX lambda, nu;
  double mu;

  VecX z, c, g, grad_j;
  SpMat jac_c, jac_g, hess_j;
  double tau = 1e-3;  // Levenberg damping, persistent across iterations
  int inner_total = 0;
  bool pin_terminal_rate = false;

  explicit AugmentedLagrangianSolver(const NlpProblem& p)
      : prob(p),
        st(p.settings()),
        m_red(13 * (p.num_knots() - 1)),
        nu(VecX::Zero(p.num_inequalities())),
        mu(p.settings().penalty_init) {
    lambda = VecX::Zero(m_red);
    const int n = prob.num_knots();
    std::vector<bool> frozen(prob.num_vars(), false);
    for (int i = 0; i < 13; ++i) frozen[prob.xi(0) + i] = true;
    for (int i = 0; i < 10; ++i) frozen[prob.xi(n - 1) + i] = true;
    std::vector<Eigen::Triplet<double>> trip;
    int col = 0;
    for (int i = 0; i < prob.num_vars(); ++i) {
      if (!frozen[i]) trip.emplace_back(i, col++, 1.0);
    }
    select_f.resize(prob.num_vars(), col);
    select_f.setFromTriplets(trip.begin(), trip.end());
    // Exact trapezoidal defects conserve |q|^2 (1 + (dt |w| / 4)^2) from knot
    // to knot, so with both boundary quaternions pinned to unit norm any
    // feasible trajectory must end with |w_N| = |w_0|.  For missions that
    // start at rest that compatibility condition has a vanishing gradient at
    // the solution (w_N = 0), which leaves the multiplier loop to crawl along
    // a near-singular direction; the restoration pass instead pins w_N = 0 --
    // the same set expressed through a full-rank direction -- via this
    // selector.
    pin_terminal_rate = prob.mission().x0.w.norm() <= 1e-12;
    if (pin_terminal_rate) {
      for (int i = 10; i < 13; ++i) frozen[prob.xi(n - 1) + i] = true;
      trip.clear();
      col = 0;
      for (int i = 0; i < prob.num_vars(); ++i) {
        if (!frozen[i]) trip.emplace_back(i, col++, 1.0);
      }
      select_e.resize(prob.num_vars(), col);
      select_e.setFromTriplets(trip.begin(), trip.end());
    } else {
      select_e = select_f;
    }
    trip.clear();
    for (int i = 0; i < m_red; ++i) trip.emplace_back(i, i, 1.0);
    select_d.resize(m_red, prob.num_equalities());
    select_d.setFromTriplets(trip.begin(), trip.end());
  }

  static double violation(const VecX& cc, const VecX& gg) {
    double v = cc.size() > 0 ? cc.cwiseAbs().maxCoeff() : 0.0;
    if (gg.size() > 0) v = std::max(v, -std::min(0.0, gg.minCoeff()));
    return v;
  }

  double al_value(const VecX& zz, VecX& cc, VecX& gg) const {
    prob.equalities(zz, cc);
    prob.inequalities(zz, gg);
    const auto cd = cc.head(m_red);
    double val =
        prob.objective(zz) - lambda.dot(cd) + 0.5 * mu * cd.squaredNorm();
    for (int i = 0; i < gg.size(); ++i) {
      const double a = nu[i] - mu * gg[i];
      val += ((a > 0.0 ? a * a : 0.0) - nu[i] * nu[i]) / (2.0 * mu);
    }
    return val;
  }

  // Minimises the augmented Lagrangian at fixed multipliers until the AL
  // gradient falls below grad_tol; returns the gradient norm at the final
  // iterate (c and g are left consistent with z).
  double minimize(double grad_tol, int max_iters, bool trace = false) {
    Eigen::SimplicialLDLT<SpMat> ldlt;
    VecX cc, gg;
    double phi = al_value(z, c, g);
    for (int it = 0;; ++it) {
      prob.objective_gradient(z, grad_j);
      prob.constraint_jacobians(z, jac_c, jac_g);
      VecX lam_full = VecX::Zero(c.size());
      lam_full.head(m_red) = lambda - mu * c.head(m_red);
      VecX a(g.size());
      VecX active(g.size());
      for (int i = 0; i < g.size(); ++i) {
        const double ai = nu[i] - mu * g[i];
        a[i] = std::max(0.0, ai);
        active[i] = ai > 0.0 ? 1.0 : 0.0;
      }
      const VecX grad_phi = select_f.transpose() *
                            (grad_j - jac_c.transpose() * lam_full -
                             jac_g.transpose() * a).eval();
      const double gnorm = grad_phi.lpNorm<Eigen::Infinity>();
      if (trace) {
        std::fprintf(stderr,
                     "  [inner %3d] phi %18.10e gnorm %9.3e viol %9.3e "
                     "tau %8.1e nact %d\n",
                     it, phi, gnorm, violation(c, g), tau,
                     static_cast<int>(active.sum()));
      }
      if (gnorm <= grad_tol || it >= max_iters) {
        inner_total += it;
        return gnorm;
      }

      prob.objective_hessian(z, hess_j);
      const SpMat jac_c_red = select_d * jac_c * select_f;
      const SpMat jac_g_red = diagonal_matrix(active) * jac_g * select_f;
      SpMat h = select_f.transpose() * hess_j * select_f;
      h += mu * SpMat(jac_c_red.transpose() * jac_c_red);
      h += mu * SpMat(jac_g_red.transpose() * jac_g_red);
      const VecX dscale = h.diagonal().cwiseMax(1e-8);

      bool accepted = false;
      for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
        const SpMat hd = h + diagonal_matrix(tau * dscale);
        ldlt.compute(hd);
        if (ldlt.info() != Eigen::Success) {
          tau = std::min(tau * 10.0, 1e14);
          continue;
        }
        const VecX dz = ldlt.solve(-grad_phi);
        const double slope = grad_phi.dot(dz);
        if (!dz.allFinite() || slope >= 0.0) {
          tau = std::min(tau * 10.0, 1e14);
          continue;
        }
        const double phi_trial = al_value(z + select_f * dz, cc, gg);
        if (phi_trial <= phi + 1e-4 * slope) {
          z += select_f * dz;
          phi = phi_trial;
          c.swap(cc);
          g.swap(gg);
          tau = std::max(tau / 3.0, 1e-10);
          accepted = true;
        } else {
          tau = std::min(tau * 4.0, 1e14);
        }
      }
      if (!accepted) {
        inner_total += it + 1;
        return gnorm;  // damping exhausted; gradient norm is current
      }
    }
  }

  // Feasibility restoration: damped Gauss-Newton on the residual
  //   r(z) = [ defect rows ; min(g, 0) ]
  // over the free variables.  The augmented-Lagrangian loop stalls on the
  // last decades of feasibility whenever the active constraint Jacobian is
  // nearly rank-deficient at the solution: penalty steps contract each
  // residual direction in proportion to its singular value, so a direction
  // that couples weakly to the variables drains over hundreds of outer
  // iterations.  Missions that start at rest always end in that regime --
  // the trapezoidal defects propagate |q_k|^2 (1 + (dt |w_k| / 4)^2)
  // unchanged from knot to knot, so unit boundary quaternions force
  // |w_N| = |w_0| = 0, a condition whose own gradient vanishes at w_N = 0.
  // The restoration therefore pins w_N to zero outright (the same feasible
  // set, imposed rather than solved for) and pulls the remaining residual
  // down by least squares, which has no multipliers to misbehave.  Works on
  // copies and commits z only when the violation certificate is reached, so
  // a failed attempt leaves the multiplier loop undisturbed.
  bool restore_feasibility() {
    constexpr int kMaxRestore = 150;
    VecX z_e = z;
    if (pin_terminal_rate) {
      z_e.segment<3>(prob.xi(prob.num_knots() - 1) + 10).setZero();
    }

    Eigen::SimplicialLDLT<SpMat> ldlt;
    VecX c_e, g_e, cc, gg;
    prob.equalities(z_e, c_e);
    prob.inequalities(z_e, g_e);
    const auto hinge_sq = [](const VecX& gg_) {
      double s = 0.0;
      for (int i = 0; i < gg_.size(); ++i) {
        if (gg_[i] < 0.0) s += gg_[i] * gg_[i];
      }
      return s;
    };
    double f0 = 0.5 * (c_e.head(m_red).squaredNorm() + hinge_sq(g_e));
    double tau_r = 1e-8;
    for (int it = 0; it < kMaxRestore; ++it) {
      if (violation(c_e, g_e) <= st.violation_tol) {
        z = z_e;
        c = c_e;
        g = g_e;
        return true;
      }

      prob.constraint_jacobians(z_e, jac_c, jac_g);
      const SpMat jce = select_d * jac_c * select_e;
      // Violated inequality rows enter the residual as-is; satisfied rows
      // contribute nothing (min(g, 0) is flat there).
      std::vector<Eigen::Triplet<double>> trip;
      int nact = 0;
      for (int i = 0; i < g_e.size(); ++i) {
        if (g_e[i] < 0.0) trip.emplace_back(nact++, i, 1.0);
      }
      SpMat rows(nact, static_cast<int>(g_e.size()));
      rows.setFromTriplets(trip.begin(), trip.end());
      const SpMat jga = rows * jac_g * select_e;
      const VecX rg = rows * g_e;

      SpMat h = SpMat(jce.transpose() * jce);
      if (nact > 0) h += SpMat(jga.transpose() * jga);
      const VecX grad =
          jce.transpose() * c_e.head(m_red) + jga.transpose() * rg;
      const VecX dscale = h.diagonal().cwiseMax(1e-8);

      bool accepted = false;
      for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
        const SpMat hd = h + diagonal_matrix(tau_r * dscale);
        ldlt.compute(hd);
        if (ldlt.info() != Eigen::Success) {
          tau_r *= 10.0;
          if (tau_r > 1e14) return false;
          continue;
        }
        const VecX dz = ldlt.solve(-grad);
        const double slope = grad.dot(dz);
        if (!dz.allFinite() || slope >= 0.0) {
          tau_r *= 10.0;
          if (tau_r > 1e14) return false;
          continue;
        }
        double alpha = 1.0;
        for (int t = 0; t < 10; ++t, alpha *= 0.5) {
          const VecX zt = z_e + alpha * (select_e * dz);
          prob.equalities(zt, cc);
          prob.inequalities(zt, gg);
          const double ft =
              0.5 * (cc.head(m_red).squaredNorm() + hinge_sq(gg));
          if (ft <= f0 + 1e-4 * alpha * slope) {
            z_e = zt;
            c_e.swap(cc);
            g_e.swap(gg);
            f0 = ft;
            tau_r = std::max(tau_r / 3.0, 1e-10);
            accepted = true;
            break;
          }
        }
        if (!accepted) {
          tau_r *= 10.0;
          if (tau_r > 1e14) return false;
        }
      }
      if (st.verbose) {
        std::fprintf(stderr,
                     "  [restore %3d] f %12.5e viol %9.3e tau %8.1e nact %d\n",
                     it, f0, violation(c_e, g_e), tau_r, nact);
      }
      if (!accepted) return false;
    }
    return false;
  }

  SolveResult run(const Trajectory& guess) {
    z = prob.pack(guess);
    shift_knots_clear_of_obstacles(prob, z);

    // Pin the boundary components the dropped equality rows prescribe, so
    // those rows hold exactly at every iterate.
    const Mission& mission = prob.mission();
    const int last = prob.xi(prob.num_knots() - 1);
    z.segment<3>(prob.xi(0) + 0) = mission.x0.p;
    z.segment<4>(prob.xi(0) + 3) = mission.x0.q;
    z.segment<3>(prob.xi(0) + 7) = mission.x0.v;
    z.segment<3>(prob.xi(0) + 10) = mission.x0.w;
    z.segment<3>(last + 0) = mission.p_N;
    z.segment<4>(last + 3) = mission.q_N;
    z.segment<3>(last + 7) = mission.v_bN;

    SolveReport rep;
    // Past ~1e6 the Gauss-Newton model of the penalty term is too stiff for
    // the damped inner steps; the last decades of feasibility come from the
    // restoration pass instead of further penalty growth.
    constexpr double kPenaltyCap = 1e6;
    constexpr double kMultiplierCap = 1e8;
    // Hand over to the restoration once the iterate is near-feasible;
    // started earlier it would trade objective quality for feasibility the
    // multiplier loop still improves on its own.
    constexpr double kEndgameGate = 1e-4;
    double omega = 1.0;  // inner gradient tolerance, tightened every outer
    double gnorm = std::numeric_limits<double>::infinity();
    double kkt_scale = 1.0;
    double viol_prev = std::numeric_limits<double>::infinity();

    for (int outer = 0; outer < st.max_outer; ++outer) {
      rep.outer_iterations = outer + 1;
      const double denom =
          std::max({1.0,
                    lambda.size() > 0 ? lambda.lpNorm<Eigen::Infinity>() : 0.0,
                    nu.size() > 0 ? nu.lpNorm<Eigen::Infinity>() : 0.0});
      const double grad_tol = std::max(omega, 0.5 * st.kkt_tol) * denom;
      gnorm = minimize(grad_tol, st.max_inner, st.verbose && outer < 4);
      const double viol = violation(c, g);
      if (st.verbose) {
        std::fprintf(stderr,
                     "[solve] outer %2d  viol %9.3e  grad %9.3e (tol %8.2e)  "
                     "mu %8.1e  tau %8.1e  J %12.6f  tf %7.4f  inner %d\n",
                     outer, viol, gnorm, grad_tol, mu, tau, prob.objective(z),
                     z[prob.ti()], inner_total);
      }

      // First-order multiplier estimates at the current iterate; the AL
      // gradient equals the Lagrangian gradient at these estimates.
      VecX lam_hat = lambda - mu * c.head(m_red);
      VecX nu_hat(nu.size());
      for (int i = 0; i < lam_hat.size(); ++i) {
        lam_hat[i] = std::clamp(lam_hat[i], -kMultiplierCap, kMultiplierCap);
      }
      for (int i = 0; i < nu.size(); ++i) {
        nu_hat[i] = std::min(std::max(0.0, nu[i] - mu * g[i]), kMultiplierCap);
      }
      kkt_scale = std::max(
          {1.0, lam_hat.size() > 0 ? lam_hat.lpNorm<Eigen::Infinity>() : 0.0,
           nu_hat.size() > 0 ? nu_hat.lpNorm<Eigen::Infinity>() : 0.0});

      const bool done =
          viol <= st.violation_tol && gnorm <= st.kkt_tol * kkt_scale;
      lambda.swap(lam_hat);
      nu.swap(nu_hat);
      if (done) {
        rep.converged = true;
        break;
      }
      if (viol <= kEndgameGate) {
        if (restore_feasibility()) {
          // Refresh the reported stationarity at the restored point under
          // the multiplier estimates already in hand.
          prob.objective_gradient(z, grad_j);
          prob.constraint_jacobians(z, jac_c, jac_g);
          VecX lam_full = VecX::Zero(c.size());
          lam_full.head(m_red) = lambda;
          gnorm = (select_f.transpose() *
                   (grad_j - jac_c.transpose() * lam_full -
                    jac_g.transpose() * nu)
                       .eval())
                      .lpNorm<Eigen::Infinity>();
          rep.converged = true;
          break;
        }
        // Restoration fell short; it committed nothing, so the multiplier
        // loop resumes unchanged.
      }
      // Grow the penalty only when feasibility stalls; the multiplier
      // updates above carry the convergence the rest of the time.
      if (viol > 0.5 * viol_prev && viol > 1e-12) {
        mu = std::min(mu * st.penalty_growth, kPenaltyCap);
      }
      viol_prev = viol;
      omega = std::max(omega * 0.25, 0.3 * st.kkt_tol);
    }

    rep.inner_iterations = inner_total;
    rep.max_violation = violation(c, g);
    rep.kkt_residual = gnorm / kkt_scale;
    rep.cost = prob.objective(z);
    rep.message = rep.converged
                      ? "converged"
                      : (rep.max_violation > st.violation_tol
                             ? "infeasible at iteration limit"
                             : "feasible but not stationary at limit");
    return SolveResult{prob.unpack(z), rep};
  }
};

}  // namespace

SolveResult solve(const NlpProblem& problem, const Trajectory& guess) {
  AugmentedLagrangianSolver solver(problem);
  return solver.run(guess);
}

}  // namespace uavco
