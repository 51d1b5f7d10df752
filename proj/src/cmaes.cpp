#include "uavco/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <omp.h>

namespace uavco {

namespace {

constexpr int kDim = 3;

// Recombination weights and adaptation rates for the given population size
// (standard defaults for the canonical update equations).
struct Coefficients {
  int mu = 0;
  VecX weights;
  double mu_eff = 0.0;
  double c_sigma = 0.0;
  double d_sigma = 0.0;
  double c_c = 0.0;
  double c_1 = 0.0;
  double c_mu = 0.0;
  double chi_n = 0.0;

  explicit Coefficients(int n_pop) {
    const double n = kDim;
    mu = n_pop / 2;
    weights.resize(mu);
    for (int i = 0; i < mu; ++i) {
      weights[i] = std::log(0.5 * (n_pop + 1)) - std::log(i + 1.0);
    }
    weights /= weights.sum();
    mu_eff = 1.0 / weights.squaredNorm();
    c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
    d_sigma = 1.0 + c_sigma +
              2.0 * std::max(0.0, std::sqrt((mu_eff - 1.0) / (n + 1.0)) - 1.0);
    c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
    c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff);
    c_mu = std::min(1.0 - c_1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) /
                                   ((n + 2.0) * (n + 2.0) + mu_eff));
    chi_n = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
  }
};

Vec3 to_unit_box(const DesignParams& d, const DesignBounds& bounds) {
  return (d.vec() - bounds.lower).cwiseQuotient(bounds.width());
}

bool in_unit_box(const Vec3& y) {
  return (y.array() >= 0.0).all() && (y.array() <= 1.0).all();
}

// Refreshes the sampling and whitening factors from C, flooring eigenvalues
// to keep the factorisation positive.
void refresh_factors(CmaesState& st) {
  Eigen::SelfAdjointEigenSolver<Mat3> eig(st.C);
  Vec3 vals = eig.eigenvalues();
  bool repaired = false;
  for (int i = 0; i < kDim; ++i) {
    if (vals[i] < 1e-14) {
      vals[i] = 1e-14;
      repaired = true;
    }
  }
  if (repaired) {
    ++st.spd_repairs;
    st.C = eig.eigenvectors() * vals.asDiagonal() *
           eig.eigenvectors().transpose();
  }
  const Vec3 roots = vals.cwiseSqrt();
  st.sample_basis = eig.eigenvectors() * roots.asDiagonal();
  st.c_inv_sqrt = eig.eigenvectors() * roots.cwiseInverse().asDiagonal() *
                  eig.eigenvectors().transpose();
}

}  // namespace

DesignParams to_design(const Vec3& y, const DesignBounds& bounds) {
  return DesignParams::from_vec(bounds.lower +
                                y.cwiseProduct(bounds.width()));
}

CmaesState init_state(const CmaesConfig& cfg) {
  if (cfg.n_pop < 4) throw std::invalid_argument("cmaes: population < 4");
  if (!(cfg.sigma0 > 0.0)) throw std::invalid_argument("cmaes: sigma0 <= 0");
  CmaesState st;
  Vec3 d0 = cfg.bounds.centre();
  if (cfg.d0) d0 = cfg.bounds.clamp(*cfg.d0);
  st.mean = to_unit_box(DesignParams::from_vec(d0), cfg.bounds);
  st.prev_mean = st.mean;
  st.sigma = cfg.sigma0;
  refresh_factors(st);
  return st;
}

std::vector<DesignParams> ask(const CmaesState& state, const CmaesConfig& cfg,
                              std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<DesignParams> out;
  out.reserve(cfg.n_pop);
  for (int i = 0; i < cfg.n_pop; ++i) {
    Vec3 y;
    for (int attempt = 0; attempt < 10; ++attempt) {
      const Vec3 z(normal(rng), normal(rng), normal(rng));
      y = state.mean + state.sigma * (state.sample_basis * z);
      if (in_unit_box(y)) break;
    }
    y = y.cwiseMax(0.0).cwiseMin(1.0);
    out.push_back(to_design(y, cfg.bounds));
  }
  return out;
}

void tell(CmaesState& state, const CmaesConfig& cfg,
          const std::vector<DesignParams>& candidates, const VecX& costs) {
  const int n_pop = static_cast<int>(candidates.size());
  if (costs.size() != n_pop || n_pop != cfg.n_pop) {
    throw std::invalid_argument("cmaes: candidate/cost length mismatch");
  }
  if (!costs.allFinite()) {
    throw std::invalid_argument("cmaes: non-finite cost");
  }
  const Coefficients co(n_pop);

  // Rank candidates by cost; ties keep sampling order so that any strictly
  // increasing transform of the costs produces the identical update.
  std::vector<int> order(n_pop);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return costs[a] < costs[b]; });

  Vec3 mean_new = Vec3::Zero();
  for (int i = 0; i < co.mu; ++i) {
    mean_new += co.weights[i] * to_unit_box(candidates[order[i]], cfg.bounds);
  }

  const Vec3 shift = (mean_new - state.mean) / state.sigma;
  state.p_sigma =
      (1.0 - co.c_sigma) * state.p_sigma +
      std::sqrt(co.c_sigma * (2.0 - co.c_sigma) * co.mu_eff) *
          (state.c_inv_sqrt * shift);

  const int gen = state.generation + 1;
  const double ps_norm = state.p_sigma.norm();
  const bool h_sigma =
      ps_norm / std::sqrt(1.0 - std::pow(1.0 - co.c_sigma, 2.0 * gen)) <
      (1.4 + 2.0 / (kDim + 1.0)) * co.chi_n;
  state.p_c = (1.0 - co.c_c) * state.p_c +
              (h_sigma ? std::sqrt(co.c_c * (2.0 - co.c_c) * co.mu_eff) : 0.0) *
                  shift;

  Mat3 rank_mu = Mat3::Zero();
  for (int i = 0; i < co.mu; ++i) {
    const Vec3 yi =
        (to_unit_box(candidates[order[i]], cfg.bounds) - state.mean) /
        state.sigma;
    rank_mu += co.weights[i] * yi * yi.transpose();
  }
  const double delta_h = (1.0 - (h_sigma ? 1.0 : 0.0)) * co.c_c * (2.0 - co.c_c);
  state.C = (1.0 - co.c_1 - co.c_mu) * state.C +
            co.c_1 * (state.p_c * state.p_c.transpose() + delta_h * state.C) +
            co.c_mu * rank_mu;
  state.C = 0.5 * (state.C + state.C.transpose()).eval();

  state.sigma *=
      std::exp((co.c_sigma / co.d_sigma) * (ps_norm / co.chi_n - 1.0));

  state.prev_mean = state.mean;
  state.mean = mean_new;
  state.prev_gen_best = state.gen_best;
  state.gen_best = costs[order[0]];
  if (state.gen_best < state.best_cost) {
    state.best_cost = state.gen_best;
    state.best = candidates[order[0]];
  }
  state.generation = gen;
  refresh_factors(state);
}

bool converged(const CmaesState& state, const CmaesConfig& cfg) {
  if (state.generation >= cfg.max_generations) return true;
  if (state.generation < 2) return false;
  const double cost_change = std::abs(state.gen_best - state.prev_gen_best);
  const Vec3 move =
      (state.mean - state.prev_mean).cwiseProduct(cfg.bounds.width());
  return cost_change < cfg.tol_cost &&
         move.lpNorm<Eigen::Infinity>() < cfg.tol_param;
}

CmaesResult run_cmaes(const CmaesConfig& cfg, const Objective& objective) {
  CmaesState state = init_state(cfg);
  std::mt19937_64 rng(cfg.seed);
  CmaesResult out;

  while (true) {
    const std::vector<DesignParams> candidates = ask(state, cfg, rng);
    VecX costs(cfg.n_pop);
    std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < cfg.n_pop; ++i) {
      try {
        costs[i] = objective(candidates[i]);
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
        costs[i] = std::numeric_limits<double>::quiet_NaN();
      }
    }
    if (failure) std::rethrow_exception(failure);
    out.evaluations += cfg.n_pop;

    tell(state, cfg, candidates, costs);
    out.history.push_back(GenerationRecord{
        state.generation, state.gen_best, state.best_cost,
        to_design(state.mean, cfg.bounds), state.sigma});

    if (converged(state, cfg)) {
      out.converged_by_tolerance = state.generation < cfg.max_generations;
      break;
    }
  }

  out.best = state.best;
  out.best_cost = state.best_cost;
  out.generations = state.generation;
  return out;
}

}  // namespace uavco
