#pragma once

#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "uavco/dynamics.hpp"
#include "uavco/trajectory.hpp"
#include "uavco/types.hpp"

namespace uavco {

// Vertical cylinder of infinite extent; only horizontal distance to the axis
// matters.
struct Obstacle {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};

// Weights of the time-plus-energy objective
//   J = omega1 t_f + omega2 sum_k (T_k V_k / eta_p + k_s |delta_k|^2) dt.
struct CostWeights {
  double omega1 = 0.1;  // time weight
  double omega2 = 1.0;  // energy weight
  double eta_p = 0.5;   // propulsive efficiency
  double k_s = 0.1;     // deflection power coefficient, W/rad^2
};

// Boundary conditions, path constraints and transcription size for one
// planning problem.  Terminal constraints fix position, attitude and linear
// velocity; angular rate is left free.
struct Mission {
  State x0;
  Vec3 p_N = Vec3::Zero();
  Vec4 q_N = Vec4(1, 0, 0, 0);
  Vec3 v_bN = Vec3::Zero();
  std::vector<Obstacle> obstacles;
  double gate_radius = 1.0;  // terminal acceptance radius used by evaluation
  ActuatorLimits limits;
  CostWeights weights;
  int knots = 60;  // >= 10
  double t_f_min = 0.5;
  double t_f_max = 30.0;
};

struct SolverSettings {
  double kkt_tol = 1e-6;        // scaled stationarity tolerance
  double violation_tol = 1e-6;  // feasibility tolerance (both signs)
  // Half-width of the |q|^2 band. Exact trapezoidal defects conserve
  // |q|^2 * (1 + (dt*|w|/4)^2) along the trajectory, so the band must be
  // wide enough to absorb a norm drift of (dt/4)^2 * max |w_k^2 - w_0^2|;
  // tightening it below that makes every maneuvering problem infeasible.
  double quat_band = 2e-2;
  int max_outer = 60;           // multiplier / penalty updates
  int max_inner = 80;           // Newton steps per outer iteration
  double penalty_init = 10.0;
  double penalty_growth = 10.0;
  bool verbose = false;         // per-iteration diagnostics on stderr
};

// Time-plus-energy objective evaluated on a knot trajectory.
double cost(const Trajectory& traj, const CostWeights& w);

// Trapezoidal collocation residual over one interval:
//   zeta = x_{k+1} - x_k - dt/2 (f(x_k,u_k) + f(x_{k+1},u_{k+1})).
Vec13 defect(const State& xk, const State& xk1, const ControlInput& uk,
             const ControlInput& uk1, double dt, const VehicleParams& vp);

// Signed horizontal clearance between a wing of span `span` and a cylinder;
// feasible iff >= 0.
double obstacle_clearance(const Vec3& p, const Obstacle& obs, double span);

// Straight-line seed: linear position, spherical attitude interpolation with
// the matching constant body rate, constant speed, level-trim thrust, zero
// deflections; t_f = path length / cruise speed clamped to the mission
// bounds.
Trajectory initial_guess(const Mission& mission, const VehicleParams& vp);

// The transcribed nonlinear program.  Decision vector layout:
//   z = [x_0 (13), u_0 (4), x_1, u_1, ..., x_{N-1}, u_{N-1}, t_f],
// equalities stacked as [interval defects; initial state; terminal
// position/attitude/velocity], inequalities (feasible iff >= 0) stacked as
// [per-knot thrust, deflection, quaternion-band and obstacle bounds;
// per-interval deflection-rate bounds; t_f bounds].
//
// The vehicle model is captured by reference; it must outlive the problem.
class NlpProblem {
 public:
  NlpProblem(const Mission& mission, const VehicleParams& vp,
             const SolverSettings& settings);

  const Mission& mission() const { return mission_; }
  const VehicleParams& vehicle() const { return vp_; }
  const SolverSettings& settings() const { return settings_; }

  int num_vars() const { return 17 * n_ + 1; }
  int num_equalities() const { return 13 * n_ + 10; }
  int num_inequalities() const {
    return n_ * (10 + num_obstacles()) + 6 * (n_ - 1) + 2;
  }
  int num_knots() const { return n_; }
  int num_obstacles() const {
    return static_cast<int>(mission_.obstacles.size());
  }

  // Decision-vector layout.
  int xi(int k) const { return 17 * k; }       // first index of x_k
  int ui(int k) const { return 17 * k + 13; }  // first index of u_k
  int ti() const { return 17 * n_; }           // index of t_f

  // Knot <-> flat-vector conversions.
  VecX pack(const Trajectory& traj) const;
  Trajectory unpack(const VecX& z) const;

  double objective(const VecX& z) const;
  void objective_gradient(const VecX& z, VecX& grad) const;

  // Equality residuals c(z) (zero at feasibility) and inequality values g(z)
  // (non-negative at feasibility).
  void equalities(const VecX& z, VecX& c) const;
  void inequalities(const VecX& z, VecX& g) const;

  // Sparse first derivatives of the two constraint stacks.
  void constraint_jacobians(const VecX& z, Eigen::SparseMatrix<double>& Jc,
                            Eigen::SparseMatrix<double>& Jg) const;

  // Exact second derivative of the objective (sparse, symmetric).
  void objective_hessian(const VecX& z, Eigen::SparseMatrix<double>& H) const;

  // Dense Jacobians for small problems (derivative checks).
  MatX dense_equality_jacobian(const VecX& z) const;
  MatX dense_inequality_jacobian(const VecX& z) const;

 private:
  void dynamics_jacobian(const Vec13& x, const VecU& u,
                         Eigen::Matrix<double, 13, 13>& A,
                         Eigen::Matrix<double, 13, 4>& B) const;

  Mission mission_;
  VehicleParams vp_;
  SolverSettings settings_;
  int n_ = 0;
};

// Validates the mission (knot count, terminal clearance of all obstacles) and
// builds the program.  Throws std::invalid_argument on an inconsistent
// mission.
NlpProblem transcribe(const Mission& mission, const VehicleParams& vp,
                      const SolverSettings& settings);

struct SolveReport {
  bool converged = false;
  int outer_iterations = 0;
  int inner_iterations = 0;
  double max_violation = 0.0;    // worst equality / inequality infeasibility
  double kkt_residual = 0.0;     // scaled stationarity measure
  double cost = 0.0;
  std::string message;
};

struct SolveResult {
  Trajectory trajectory;
  SolveReport report;
};

// Augmented-Lagrangian solve starting from `guess`.  Deterministic given the
// guess; single-threaded.
SolveResult solve(const NlpProblem& problem, const Trajectory& guess);

}  // namespace uavco
