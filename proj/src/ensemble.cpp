#include "uavco/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <omp.h>

namespace uavco {

namespace {

// Fixed-increment hash stream; one state per simulation index gives every
// simulation its own perturbation and gust seeds independent of thread
// scheduling.
std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct SimSeeds {
  std::uint64_t perturb;
  std::uint64_t wind;
};

SimSeeds seeds_for(std::uint64_t base_seed, int index) {
  std::uint64_t s =
      base_seed + static_cast<std::uint64_t>(index + 1) * 0x9E3779B97F4A7C15ull;
  SimSeeds out{};
  out.perturb = splitmix64(s);
  out.wind = splitmix64(s);
  return out;
}

double tracking_power(const State& x, const ControlInput& u,
                      const CostWeights& w) {
  return u.thrust * x.v.norm() / w.eta_p + w.k_s * u.delta.squaredNorm();
}

}  // namespace

const char* to_string(FailureReason r) {
  switch (r) {
    case FailureReason::kNone: return "none";
    case FailureReason::kDiverged: return "diverged";
    case FailureReason::kGainSynthesis: return "gain-synthesis";
    case FailureReason::kClearance: return "clearance";
    case FailureReason::kGateMiss: return "gate-miss";
  }
  return "unknown";
}

const GainResult& GainSchedule::at(double time) const {
  const int last = static_cast<int>(gains.size()) - 1;
  const int idx = std::clamp(static_cast<int>(time / dt), 0, last);
  return gains[idx];
}

GainSchedule schedule_gains(const Trajectory& ref, const VehicleParams& nominal,
                            const LqrWeights& weights, double control_dt) {
  GainSchedule sched;
  sched.dt = control_dt;
  const int epochs =
      static_cast<int>(std::floor(ref.t_f / control_dt - 1e-12)) + 1;
  sched.gains.reserve(epochs);
  State rx;
  ControlInput ru;
  for (int j = 0; j < epochs; ++j) {
    ref.sample(j * control_dt, rx, ru);
    GainResult g = synthesize_gains(rx, ru, nominal, weights);
    if (!g.ok) {
      sched.fail_index = j;
      return sched;
    }
    sched.gains.push_back(g);
  }
  sched.ok = true;
  return sched;
}

double sim_loss(const SimLog& log, const LossWeights& w) {
  return log.cost + w.w_track * log.mean_sq_error +
         w.w_fail * (log.success ? 0.0 : 1.0);
}

SimLog simulate_closed_loop(const Trajectory& ref, const GainSchedule& sched,
                            const VehicleParams& perturbed,
                            const Mission& mission, const NoiseConfig& noise,
                            const SimulationConfig& sim,
                            std::uint64_t wind_seed) {
  SimLog log;
  if (!sched.ok) {
    log.reason = FailureReason::kGainSynthesis;
    log.loss = sim_loss(log, sim.loss);
    return log;
  }

  const double t_f = ref.t_f;
  const double dt = sim.physics_dt;
  const int n_steps = static_cast<int>(std::ceil(t_f / dt - 1e-12));
  const int log_every =
      std::max(1, static_cast<int>(std::llround(sim.control_dt / dt)));
  const double span = perturbed.model->wing_span;

  VonKarmanFilter gusts;
  if (noise.wind_enabled) {
    gusts = VonKarmanFilter(noise.wind, dt, wind_seed);
  }

  State x = mission.x0;
  ControlInput applied = ref.u.front();
  State rx;
  ControlInput ru;

  const auto clearance_at = [&](const Vec3& p) {
    for (const Obstacle& obs : mission.obstacles) {
      log.min_clearance =
          std::min(log.min_clearance, obstacle_clearance(p, obs, span));
    }
  };
  const auto log_sample = [&](double time) {
    ref.sample(time, rx, ru);
    log.t.push_back(time);
    log.x.push_back(x);
    log.ref.push_back(rx);
    log.u.push_back(applied);
    log.mean_sq_error += (x.p - rx.p).squaredNorm();
  };

  clearance_at(x.p);
  double energy = 0.0;
  double power_prev = tracking_power(x, applied, mission.weights);
  double elapsed = 0.0;
  bool diverged = false;

  for (int i = 0; i < n_steps; ++i) {
    const double t = i * dt;
    if (i % log_every == 0) log_sample(t);

    const ControlInput cmd =
        tracker_command(ref, t, x, sched.at(t), mission.limits);
    const double step = std::min(dt, t_f - t);
    applied = apply_actuator_dynamics(cmd, applied, step, mission.limits);
    const Vec3 wind = noise.wind_enabled ? gusts.step() : Vec3::Zero();
    x = integrate_step(x, applied, step, perturbed, wind);
    elapsed = t + step;

    ref.sample(elapsed, rx, ru);
    if (!x.pack().allFinite() ||
        (x.p - rx.p).norm() > sim.divergence_radius) {
      diverged = true;
      break;
    }
    clearance_at(x.p);
    const double power = tracking_power(x, applied, mission.weights);
    energy += 0.5 * step * (power_prev + power);
    power_prev = power;
  }

  log_sample(elapsed);
  log.mean_sq_error /= static_cast<double>(log.t.size());
  log.terminal_position = x.p;
  log.cost = mission.weights.omega1 * elapsed + mission.weights.omega2 * energy;

  if (diverged) {
    log.reason = FailureReason::kDiverged;
  } else if (log.min_clearance < 0.0) {
    log.reason = FailureReason::kClearance;
  } else if ((x.p - mission.p_N).norm() > mission.gate_radius) {
    log.reason = FailureReason::kGateMiss;
  } else {
    log.success = true;
  }
  log.loss = sim_loss(log, sim.loss);
  return log;
}

SimLog simulate_closed_loop(const Trajectory& ref,
                            const VehicleParams& nominal,
                            const VehicleParams& perturbed,
                            const Mission& mission, const NoiseConfig& noise,
                            const SimulationConfig& sim,
                            std::uint64_t wind_seed) {
  const GainSchedule sched =
      schedule_gains(ref, nominal, sim.lqr, sim.control_dt);
  return simulate_closed_loop(ref, sched, perturbed, mission, noise, sim,
                              wind_seed);
}

std::pair<double, double> ensemble_metrics(const std::vector<SimLog>& logs) {
  if (logs.empty()) return {0.0, 0.0};
  double mse = 0.0;
  double successes = 0.0;
  for (const SimLog& log : logs) {
    mse += log.mean_sq_error;
    if (log.success) successes += 1.0;
  }
  const double n = static_cast<double>(logs.size());
  return {std::sqrt(mse / n), successes / n};
}

namespace {

EnsembleResult evaluate_impl(const DesignParams& d, const Mission& mission,
                             const NoiseConfig& noise,
                             const EvaluationConfig& cfg, bool parallel) {
  EnsembleResult out;

  PhysicalModel nominal_model;
  try {
    nominal_model = map_design(d, cfg.airframe, cfg.bounds);
  } catch (const std::invalid_argument&) {
    out.robust_cost = planning_failure_cost(cfg.sim.loss);
    out.planning.message = "design mapping failed";
    return out;
  }
  const VehicleParams nominal{&nominal_model, cfg.env, cfg.stall, cfg.aero};

  const NlpProblem problem = transcribe(mission, nominal, cfg.solver);
  const SolveResult sol = solve(problem, initial_guess(mission, nominal));
  out.planning = sol.report;
  out.reference = sol.trajectory;
  if (!sol.report.converged) {
    out.robust_cost = planning_failure_cost(cfg.sim.loss);
    return out;
  }
  out.planned = true;

  const GainSchedule sched =
      schedule_gains(sol.trajectory, nominal, cfg.sim.lqr, cfg.sim.control_dt);

  const int n = std::max(1, noise.n_sim);
  out.logs.resize(n);
  const auto run_one = [&](int i) {
    const SimSeeds seeds = seeds_for(noise.base_seed, i);
    try {
      std::mt19937_64 rng(seeds.perturb);
      const DesignParams dp =
          perturb_design(d, noise.sigma, rng, cfg.bounds);
      const PhysicalModel pm = map_design(dp, cfg.airframe, cfg.bounds);
      const VehicleParams pvp{&pm, cfg.env, cfg.stall, cfg.aero};
      out.logs[i] = simulate_closed_loop(sol.trajectory, sched, pvp, mission,
                                         noise, cfg.sim, seeds.wind);
    } catch (const std::exception&) {
      // A perturbed model that cannot be built counts as a lost vehicle.
      SimLog log;
      log.reason = FailureReason::kDiverged;
      log.loss = sim_loss(log, cfg.sim.loss);
      out.logs[i] = log;
    }
  };

  if (parallel) {
    const int threads =
        cfg.workers > 0 ? cfg.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (int i = 0; i < n; ++i) run_one(i);
  } else {
    for (int i = 0; i < n; ++i) run_one(i);
  }

  double total = 0.0;
  for (const SimLog& log : out.logs) total += log.loss;
  out.robust_cost = total / static_cast<double>(n);
  const auto [rmse, eta] = ensemble_metrics(out.logs);
  out.rmse = rmse;
  out.success_rate = eta;
  return out;
}

}  // namespace

EnsembleResult evaluate_design(const DesignParams& d, const Mission& mission,
                               const NoiseConfig& noise,
                               const EvaluationConfig& cfg) {
  return evaluate_impl(d, mission, noise, cfg, true);
}

EnsembleResult evaluate_design_serial(const DesignParams& d,
                                      const Mission& mission,
                                      const NoiseConfig& noise,
                                      const EvaluationConfig& cfg) {
  return evaluate_impl(d, mission, noise, cfg, false);
}

}  // namespace uavco
