#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocd/costs.hpp"
#include "ocd/random.hpp"
#include "ocd/scenarios.hpp"

namespace ocd {

using RawWeights = std::array<double, kNumFeatures>;

inline constexpr double kDivergedFitness = std::numeric_limits<double>::infinity();

struct DesignConfig {
  int budget = 85;
  double sigma0 = 0.05;
  int n_init = 1;
  /// CMA-ES start; the scenario's true weights when unset.
  std::optional<RawWeights> init_mean;
  std::uint64_t master_seed = 0;
  /// Reuse the same start states and rollout seeds for every candidate.
  /// When false each candidate gets freshly sampled starts.
  bool common_random_numbers = true;
  /// Evaluate the true weights as the first candidate of generation 0.
  bool seed_true_weights = true;
  /// Concurrent fitness evaluations (0 = hardware concurrency).
  unsigned workers = 0;

  void validate() const;
};

/// Start states and rollout seeds a fitness evaluation averages over.
struct TrainingSet {
  std::vector<WorldState> states;
  std::vector<std::uint64_t> seeds;
};

/// n start states sampled from the scenario's start distribution and n
/// rollout seeds, all derived from `seed` through labeled streams.
TrainingSet make_training_set(const Scenario& s, int n, std::uint64_t seed);

struct CandidateRecord {
  CostWeights weights;
  double fitness = kDivergedFitness;
  int eval_index = 0;
  int generation = 0;
  std::vector<std::uint64_t> rollout_seeds;

  bool diverged() const noexcept { return !std::isfinite(fitness); }
};

struct DesignResult {
  CostWeights best;
  double best_fitness = kDivergedFitness;
  std::vector<CandidateRecord> history;
};

/// Mean cumulative true cost of MPC rollouts planned under the normalized
/// candidate, one per (start state, possible true human). Any diverged
/// rollout, or an all-zero candidate, gives kDivergedFitness.
double fitness(std::span<const double, kNumFeatures> candidate, const Scenario& scenario,
               std::span<const WorldState> initial_states, const CostWeights& theta_true,
               std::span<const std::uint64_t> seeds);

/// CMA-ES over raw weight space. Exactly cfg.budget fitness evaluations.
/// When `training` is given it replaces the sampled training set.
DesignResult cma_search(const DesignConfig& cfg, const Scenario& scenario,
                        const CostWeights& theta_true, const TrainingSet* training = nullptr);

/// Uniform directions on the unit sphere, cfg.budget of them.
DesignResult random_search(const DesignConfig& cfg, const Scenario& scenario,
                           const CostWeights& theta_true, const TrainingSet* training = nullptr);

/// Seven standard normal draws, normalized. Redraws the (practically
/// impossible) zero vector.
CostWeights sample_unit_weights(Rng& rng);

/// eval_index,fitness,w1..w7 with a header row. Diverged fitness is "inf".
void write_history_csv(std::ostream& out, const std::vector<CandidateRecord>& history);

nlohmann::json design_result_to_json(const DesignResult& r, const DesignConfig& cfg,
                                     int scenario_id, const char* method);

// ---------------------------------------------------------------------------

/// Ask/tell CMA-ES with (mu/mu_w, lambda) recombination, cumulative step-size
/// adaptation, rank-one and rank-mu covariance updates, and IPOP restarts
/// (population doubled on each restart).
class CmaEs {
 public:
  CmaEs(std::span<const double> mean, double sigma, std::uint64_t seed);
  ~CmaEs();
  CmaEs(CmaEs&&) noexcept;
  CmaEs& operator=(CmaEs&&) noexcept;

  int population_size() const noexcept;
  int generation() const noexcept;
  int restarts() const noexcept;
  double sigma() const noexcept;
  std::vector<double> mean() const;

  /// A fresh population of population_size() points. Restarts first if
  /// should_restart().
  std::vector<std::vector<double>> ask();

  /// Replace population member i with an externally chosen point before
  /// tell(). Its step is length-clipped as in standard CMA-ES injection.
  void inject(std::size_t i, std::span<const double> x);

  /// Update from the fitness of the last ask() population, smaller is
  /// better. Non-finite values rank last.
  void tell(std::span<const double> fitness);

  /// True when the search has stagnated; the next ask() restarts with a
  /// doubled population.
  bool should_restart() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ocd
