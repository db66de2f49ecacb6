#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocd/costdesign.hpp"
#include "ocd/costs.hpp"
#include "ocd/scenarios.hpp"

namespace ocd {

inline constexpr int kResultSchemaVersion = 1;

struct ExperimentResult {
  int scenario_id = 0;
  std::string condition;
  std::vector<double> per_trial;
  double mean = 0.0;
  double std_error = 0.0;
  /// 100 (mean_true - mean) / mean_true; 0 when mean_true is 0.
  double reduction_pct = 0.0;
  std::vector<std::uint64_t> seeds;
};

/// Sample mean and standard error (sample std / sqrt(n); 0 for n < 2).
std::pair<double, double> mean_and_std_error(const std::vector<double>& xs);

double reduction_pct(double mean_true, double mean_condition);

/// Per-state expected true cost of planning with `theta_plan` on each start
/// of `set`, evaluated concurrently.
std::vector<double> evaluate_on_set(const CostWeights& theta_plan, const Scenario& scenario,
                                    const TrainingSet& set, unsigned workers = 0);

/// Paired rollouts: trial i uses the same sampled start and seed under the
/// scenario's true weights and under `learned`. Returns (true-cost result,
/// learned result); the learned result carries the reduction.
std::pair<ExperimentResult, ExperimentResult> compare_experiment(
    const Scenario& scenario, const CostWeights& learned, int trials, std::uint64_t master_seed,
    const std::string& learned_condition = "surrogate", unsigned workers = 0);

struct GeneralizationRow {
  int replicate = 0;
  /// 0 for the true-cost baseline row.
  int n_init = 0;
  std::string condition;  ///< "learned" or "true_cost"
  double mean_test_cost = 0.0;
  double train_fitness = 0.0;
  CostWeights weights;
};

struct GeneralizationConfig {
  std::vector<int> n_init_values{1, 2, 5, 10};
  int test_size = 24;
  int replicates = 10;
  std::uint64_t master_seed = 0;
  int budget = 85;
  double sigma0 = 0.05;
  unsigned workers = 0;
};

/// Per replicate: one shared test set, the true-cost baseline on it, and
/// for each n_init a CMA-ES design on n_init fresh training starts evaluated
/// on the test set. Training and test starts come from separate streams.
std::vector<GeneralizationRow> generalization_experiment(const Scenario& scenario,
                                                         const GeneralizationConfig& cfg);

nlohmann::json to_json(const ExperimentResult& r);
nlohmann::json compare_to_json(const ExperimentResult& baseline, const ExperimentResult& other);
nlohmann::json generalization_to_json(const std::vector<GeneralizationRow>& rows,
                                      const GeneralizationConfig& cfg, int scenario_id);

}  // namespace ocd
