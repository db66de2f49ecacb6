#include "ocd/harness.hpp"

#include <cmath>
#include <numeric>

#include "ocd/errors.hpp"
#include "ocd/mpc.hpp"
#include "ocd/parallel.hpp"

namespace ocd {

std::pair<double, double> mean_and_std_error(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

double reduction_pct(double mean_true, double mean_condition) {
  if (mean_true == 0.0) return 0.0;
  return 100.0 * (mean_true - mean_condition) / mean_true;
}

std::vector<double> evaluate_on_set(const CostWeights& theta_plan, const Scenario& scenario,
                                    const TrainingSet& set, unsigned workers) {
  if (set.states.size() != set.seeds.size()) {
    throw ArityError("evaluate_on_set: one seed per start state required");
  }
  std::vector<double> out(set.states.size());
  parallel_for(
      set.states.size(),
      [&](std::size_t i) {
        try {
          out[i] = expected_rollout_cost(theta_plan, scenario.theta_true, scenario, set.states[i],
                                         set.seeds[i]);
        } catch (const RolloutDiverged&) {
          out[i] = kDivergedFitness;
        }
      },
      workers);
  return out;
}

std::pair<ExperimentResult, ExperimentResult> compare_experiment(
    const Scenario& scenario, const CostWeights& learned, int trials, std::uint64_t master_seed,
    const std::string& learned_condition, unsigned workers) {
  if (trials < 1) throw ConfigError("compare: trials must be >= 1");
  const TrainingSet set =
      make_training_set(scenario, trials, derive_seed(master_seed, "compare"));

  ExperimentResult base;
  base.scenario_id = scenario.id;
  base.condition = "true_cost";
  base.per_trial = evaluate_on_set(scenario.theta_true, scenario, set, workers);
  base.seeds = set.seeds;
  std::tie(base.mean, base.std_error) = mean_and_std_error(base.per_trial);
  base.reduction_pct = 0.0;

  ExperimentResult cond;
  cond.scenario_id = scenario.id;
  cond.condition = learned_condition;
  cond.per_trial = evaluate_on_set(learned, scenario, set, workers);
  cond.seeds = set.seeds;
  std::tie(cond.mean, cond.std_error) = mean_and_std_error(cond.per_trial);
  cond.reduction_pct = reduction_pct(base.mean, cond.mean);
  return {base, cond};
}

std::vector<GeneralizationRow> generalization_experiment(const Scenario& scenario,
                                                         const GeneralizationConfig& cfg) {
  if (cfg.test_size < 1) throw ConfigError("generalize: test size must be >= 1");
  if (cfg.replicates < 1) throw ConfigError("generalize: replicates must be >= 1");
  std::vector<GeneralizationRow> rows;
  for (int r = 0; r < cfg.replicates; ++r) {
    const std::uint64_t rep_seed =
        derive_seed(cfg.master_seed, "replicate", static_cast<std::uint64_t>(r));
    const TrainingSet test =
        make_training_set(scenario, cfg.test_size, derive_seed(rep_seed, "test"));

    GeneralizationRow base;
    base.replicate = r;
    base.n_init = 0;
    base.condition = "true_cost";
    base.weights = scenario.theta_true;
    const auto base_costs = evaluate_on_set(scenario.theta_true, scenario, test, cfg.workers);
    base.mean_test_cost = mean_and_std_error(base_costs).first;
    base.train_fitness = std::nan("");
    rows.push_back(base);

    for (int n : cfg.n_init_values) {
      if (n < 1) throw ConfigError("generalize: every n_init must be >= 1");
      const TrainingSet train = make_training_set(
          scenario, n, derive_seed(rep_seed, "train", static_cast<std::uint64_t>(n)));
      DesignConfig dc;
      dc.budget = cfg.budget;
      dc.sigma0 = cfg.sigma0;
      dc.n_init = n;
      dc.master_seed = derive_seed(rep_seed, "cma", static_cast<std::uint64_t>(n));
      dc.workers = cfg.workers;
      const DesignResult design = cma_search(dc, scenario, scenario.theta_true, &train);

      GeneralizationRow row;
      row.replicate = r;
      row.n_init = n;
      row.condition = "learned";
      row.weights = design.best;
      row.train_fitness = design.best_fitness;
      row.mean_test_cost =
          mean_and_std_error(evaluate_on_set(design.best, scenario, test, cfg.workers)).first;
      rows.push_back(row);
    }
  }
  return rows;
}

namespace {

nlohmann::json finite_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const ExperimentResult& r) {
  nlohmann::json trials = nlohmann::json::array();
  for (double x : r.per_trial) trials.push_back(finite_or_null(x));
  return {{"scenario", r.scenario_id},
          {"condition", r.condition},
          {"per_trial", trials},
          {"mean", finite_or_null(r.mean)},
          {"std_error", finite_or_null(r.std_error)},
          {"reduction_pct", finite_or_null(r.reduction_pct)},
          {"seeds", r.seeds}};
}

nlohmann::json compare_to_json(const ExperimentResult& baseline, const ExperimentResult& other) {
  return {{"schema_version", kResultSchemaVersion},
          {"scenario", baseline.scenario_id},
          {"trials", baseline.per_trial.size()},
          {"conditions", {to_json(baseline), to_json(other)}},
          {"reduction_pct", finite_or_null(other.reduction_pct)}};
}

nlohmann::json generalization_to_json(const std::vector<GeneralizationRow>& rows,
                                      const GeneralizationConfig& cfg, int scenario_id) {
  nlohmann::json out_rows = nlohmann::json::array();
  for (const auto& r : rows) {
    out_rows.push_back({{"replicate", r.replicate},
                        {"n_init", r.n_init},
                        {"condition", r.condition},
                        {"mean_test_cost", finite_or_null(r.mean_test_cost)},
                        {"train_fitness", finite_or_null(r.train_fitness)},
                        {"weights", r.weights.w}});
  }
  return {{"schema_version", kResultSchemaVersion},
          {"scenario", scenario_id},
          {"master_seed", cfg.master_seed},
          {"test_size", cfg.test_size},
          {"replicates", cfg.replicates},
          {"budget", cfg.budget},
          {"n_init_values", cfg.n_init_values},
          {"rows", out_rows}};
}

}  // namespace ocd
