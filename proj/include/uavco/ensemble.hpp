#pragma once

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "uavco/airframe.hpp"
#include "uavco/trajectory.hpp"
#include "uavco/trajopt.hpp"
#include "uavco/turbulence.hpp"
#include "uavco/tvlqr.hpp"

namespace uavco {

// Monte Carlo settings: relative spread of the multiplicative design noise,
// gust switch, batch size and the seed every per-simulation stream derives
// from.
struct NoiseConfig {
  double sigma = 0.0;
  bool wind_enabled = false;
  int n_sim = 100;
  std::uint64_t base_seed = 0;
  TurbulenceConfig wind;
};

// Per-simulation loss
//   L = J(closed-loop run) + w_track * mse + w_fail * (1 - S),
// where mse is the time-mean squared position error and S the success flag.
struct LossWeights {
  double w_track = 10.0;
  double w_fail = 100.0;
};

enum class FailureReason : std::uint8_t {
  kNone,
  kDiverged,
  kGainSynthesis,
  kClearance,
  kGateMiss,
};
const char* to_string(FailureReason r);

// One closed-loop run against the reference, sampled at the control cadence.
struct SimLog {
  std::vector<double> t;
  std::vector<State> x;
  std::vector<State> ref;
  std::vector<ControlInput> u;
  Vec3 terminal_position = Vec3::Zero();
  double min_clearance = std::numeric_limits<double>::infinity();
  double mean_sq_error = 0.0;  // time-mean of |p - p*|^2
  double cost = 0.0;           // time-plus-energy cost of the actual run
  double loss = 0.0;           // cost with tracking and failure penalties
  bool success = false;
  FailureReason reason = FailureReason::kNone;
};

struct SimulationConfig {
  double physics_dt = 0.002;  // plant integration step (s)
  double control_dt = 0.02;   // gain refresh and logging cadence (s)
  // Tracking error beyond this is unrecoverable; the run is cut short and
  // marked diverged (non-finite states likewise).
  double divergence_radius = 100.0;
  LqrWeights lqr;
  LossWeights loss;
};

// Tracking gains synthesised along a reference at a fixed cadence and held
// zero-order in between.  Built once per design on the nominal model; every
// perturbed simulation shares it, which is what keeps the ensemble cheap.
struct GainSchedule {
  double dt = 0.02;
  std::vector<GainResult> gains;
  bool ok = false;
  int fail_index = -1;  // first synthesis that failed, when !ok

  const GainResult& at(double time) const;
};

GainSchedule schedule_gains(const Trajectory& ref, const VehicleParams& nominal,
                            const LqrWeights& weights, double control_dt);

// Closed loop: perturbed plant, nominal-model gain schedule, optional gusts.
// The controller tracks `ref` with feedforward plus feedback, surfaces slew
// at the actuator rate limit, and success is judged at t_f (terminal position
// inside the mission gate and obstacle clearance never negative).
SimLog simulate_closed_loop(const Trajectory& ref, const GainSchedule& sched,
                            const VehicleParams& perturbed,
                            const Mission& mission, const NoiseConfig& noise,
                            const SimulationConfig& sim,
                            std::uint64_t wind_seed);

// Convenience overload that synthesises the schedule from the nominal model.
SimLog simulate_closed_loop(const Trajectory& ref,
                            const VehicleParams& nominal,
                            const VehicleParams& perturbed,
                            const Mission& mission, const NoiseConfig& noise,
                            const SimulationConfig& sim,
                            std::uint64_t wind_seed);

// Loss of a finished simulation under the given weights.
double sim_loss(const SimLog& log, const LossWeights& w);

// Ensemble aggregates: RMSE = sqrt(mean over sims of mean_sq_error) and the
// success fraction.
std::pair<double, double> ensemble_metrics(const std::vector<SimLog>& logs);

struct EvaluationConfig {
  AirframeConfig airframe;
  DesignBounds bounds;
  Environment env;
  StallParams stall;
  AeroSettings aero;
  SolverSettings solver;
  SimulationConfig sim;
  int workers = 0;  // thread cap for the parallel path; 0 = all available
};

struct EnsembleResult {
  double robust_cost = 0.0;  // mean per-simulation loss
  double rmse = 0.0;
  double success_rate = 0.0;
  std::vector<SimLog> logs;
  Trajectory reference;
  SolveReport planning;
  bool planned = false;  // false: penalty result, logs empty
};

// Cost charged when the nominal plan does not converge; keeps failed designs
// rankable without poisoning the statistics with non-finite values.
inline double planning_failure_cost(const LossWeights& w) {
  return 10.0 * w.w_fail;
}

// Plans once on the nominal model, then runs n_sim independent perturbed
// simulations and aggregates.  Deterministic in (d, mission, noise, cfg):
// per-simulation random streams are derived from base_seed and the
// simulation index, never from thread scheduling.  Simulations run in
// parallel with OpenMP.
EnsembleResult evaluate_design(const DesignParams& d, const Mission& mission,
                               const NoiseConfig& noise,
                               const EvaluationConfig& cfg);

// Serial reference implementation: identical arithmetic on one thread, kept
// for determinism tests and the parallel benchmark.
EnsembleResult evaluate_design_serial(const DesignParams& d,
                                      const Mission& mission,
                                      const NoiseConfig& noise,
                                      const EvaluationConfig& cfg);

}  // namespace uavco
