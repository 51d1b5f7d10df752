#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "uavco/airframe.hpp"
#include "uavco/types.hpp"

namespace uavco {

struct CmaesConfig {
  int n_pop = 32;        // population size, >= 4
  double sigma0 = 0.3;   // initial step as a fraction of the box width
  int max_generations = 200;
  double tol_cost = 1e-4;   // generation-best cost change threshold
  double tol_param = 1e-4;  // distribution-mean change threshold (design units)
  std::optional<Vec3> d0;   // initial mean; box centre when unset
  DesignBounds bounds;
  std::uint64_t seed = 0;
};

// Search state in coordinates normalised to the unit box (the affine map to
// design units lives in the bounds).
struct CmaesState {
  Vec3 mean = Vec3::Zero();
  double sigma = 0.3;
  Mat3 C = Mat3::Identity();
  Vec3 p_sigma = Vec3::Zero();
  Vec3 p_c = Vec3::Zero();
  int generation = 0;

  DesignParams best;
  double best_cost = std::numeric_limits<double>::infinity();
  double prev_gen_best = std::numeric_limits<double>::infinity();
  double gen_best = std::numeric_limits<double>::infinity();
  Vec3 prev_mean = Vec3::Zero();
  int spd_repairs = 0;  // eigenvalue floors applied to keep C positive

  // Sampling and whitening transforms refreshed after every update.
  Mat3 sample_basis = Mat3::Identity();  // B sqrt(Lambda)
  Mat3 c_inv_sqrt = Mat3::Identity();    // B Lambda^{-1/2} B^T
};

CmaesState init_state(const CmaesConfig& cfg);

// Design units of a normalised point.
DesignParams to_design(const Vec3& y, const DesignBounds& bounds);

// Samples n_pop candidates from N(mean, sigma^2 C); out-of-box draws are
// resampled up to ten times, then clamped.
std::vector<DesignParams> ask(const CmaesState& state, const CmaesConfig& cfg,
                              std::mt19937_64& rng);

// Rank-based CMA-ES update (weighted recombination of the best half,
// cumulative step-size adaptation, rank-one plus rank-mu covariance).
// Throws std::invalid_argument on non-finite costs or mismatched lengths.
void tell(CmaesState& state, const CmaesConfig& cfg,
          const std::vector<DesignParams>& candidates, const VecX& costs);

// True once the generation-best cost change and the mean movement (design
// units, infinity norm) both fall under their thresholds, or the generation
// budget is spent.
bool converged(const CmaesState& state, const CmaesConfig& cfg);

struct GenerationRecord {
  int generation = 0;
  double gen_best_cost = 0.0;
  double best_cost = 0.0;  // best-so-far, non-increasing
  DesignParams mean;
  double sigma = 0.0;
};

struct CmaesResult {
  DesignParams best;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<GenerationRecord> history;
  int generations = 0;
  int evaluations = 0;
  bool converged_by_tolerance = false;
};

using Objective = std::function<double(const DesignParams&)>;

// Ask/evaluate/tell loop.  Candidate evaluations within a generation are
// dispatched concurrently (the objective must be safe to call from several
// threads); costs land in per-candidate slots, so the result is identical to
// sequential evaluation.  Deterministic in (config, objective).
CmaesResult run_cmaes(const CmaesConfig& cfg, const Objective& objective);

}  // namespace uavco
