#include "ocd/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ocd/costdesign.hpp"
#include "ocd/costs.hpp"
#include "ocd/errors.hpp"
#include "ocd/harness.hpp"
#include "ocd/mpc.hpp"
#include "ocd/scenarios.hpp"

namespace ocd::cli {
namespace {

namespace fs = std::filesystem;

// Thrown for bad flag values that CLI11 cannot check on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path output_dir(const std::string& requested, std::uint64_t seed) {
  if (!requested.empty()) return requested;
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream name;
  name << std::put_time(&tm, "%Y%m%d-%H%M%S") << "_seed" << seed;
  return fs::path("runs") / name.str();
}

fs::path prepare(const fs::path& dir) {
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

CostWeights load_weights(const std::string& arg, const Scenario& s) {
  if (arg == "true") return s.theta_true;
  std::ifstream f(arg);
  if (!f) throw ConfigError("cannot read weights file " + arg);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("weights file " + arg + ": " + e.what());
  }
  return normalize_weights(raw_weights_from_json(j), WeightsLabel::kSurrogate);
}

GridSpec parse_grid(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) throw UsageError("--grid expects RxC, got '" + text + "'");
  auto number = [&](std::string_view part) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || ptr != part.data() + part.size() || v < 2) {
      throw UsageError("--grid expects RxC with R, C >= 2, got '" + text + "'");
    }
    return v;
  };
  GridSpec g;
  const std::string_view sv(text);
  g.rows = number(sv.substr(0, x));
  g.cols = number(sv.substr(x + 1));
  return g;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || ptr != item.data() + item.size() || v < 1) {
      throw UsageError("--n-init-list expects positive integers separated by commas");
    }
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("--n-init-list is empty");
  return out;
}

int lane_index(const RoadGeometry& road, double lat) {
  const auto& c = road.lane_centers;
  const auto it = std::min_element(c.begin(), c.end(), [&](double a, double b) {
    return std::abs(a - lat) < std::abs(b - lat);
  });
  return static_cast<int>(it - c.begin());
}

void write_rollout_csv(std::ostream& out, const Rollout& r) {
  out << "t,lat,lon,heading,speed,steer,accel,true_cost\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const auto& s = r.steps[i];
    out << s.state.t << ',' << s.state.robot.lat << ',' << s.state.robot.lon << ','
        << s.state.robot.heading << ',' << s.state.robot.speed << ',' << s.control.steer() << ','
        << s.control.accel() << ',' << r.per_step_true_cost[i] << '\n';
  }
}

void write_generalization_csv(std::ostream& out, const std::vector<GeneralizationRow>& rows) {
  out << "replicate,n_init,condition,mean_test_cost,train_fitness\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.replicate << ',' << r.n_init << ',' << r.condition << ',' << r.mean_test_cost << ',';
    if (std::isfinite(r.train_fitness)) out << r.train_fitness;
    out << '\n';
  }
}

struct Common {
  int scenario = 1;
  std::uint64_t seed = 0;
  bool wind = false;
  std::string out;
  unsigned workers = 0;
};

void add_scenario(CLI::App* cmd, Common& c, bool required = true) {
  auto* opt = cmd->add_option("--scenario", c.scenario, "Scenario id (1, 2 or 3)")
                  ->check(CLI::Range(1, 3));
  if (required) opt->required();
}

int do_simulate(const Common& c, const std::string& weights, std::size_t human,
                std::ostream& out) {
  const Scenario s = build_scenario(c.scenario, c.wind);
  if (human >= s.true_humans.size()) {
    throw UsageError("--human must be below " + std::to_string(s.true_humans.size()));
  }
  const CostWeights theta = load_weights(weights, s);
  RolloutOptions opt;
  opt.true_human = human;

  const fs::path dir = prepare(output_dir(c.out, c.seed));
  int code = kExitOk;
  Rollout r;
  try {
    r = mpc_rollout(theta, s.theta_true, s, c.seed, opt);
  } catch (const RolloutDiverged& e) {
    r = e.partial();
    out << "rollout diverged: " << e.what() << '\n';
    code = kExitRuntime;
  }
  nlohmann::json j = rollout_to_json(r);
  j["scenario"] = s.id;
  j["wind"] = c.wind;
  j["true_human"] = describe(s.true_humans[human]);
  j["plan_weights"] = to_json(theta);
  write_json(dir / "rollout.json", j);
  auto csv = open_out(dir / "rollout.csv");
  write_rollout_csv(csv, r);

  out << "scenario " << s.id << (c.wind ? " (wind)" : "") << ", seed " << c.seed << ", human "
      << describe(s.true_humans[human]) << '\n'
      << "steps " << r.steps.size() << ", cumulative true cost " << r.cumulative_true_cost << '\n'
      << "final lat " << r.final_state.robot.lat << " (lane "
      << lane_index(s.road, r.final_state.robot.lat) << "), speed " << r.final_state.robot.speed
      << '\n'
      << "wrote " << (dir / "rollout.json").string() << '\n';
  return code;
}

int do_design(const Common& c, int budget, double sigma0, int n_init, const std::string& method,
              std::ostream& out) {
  const Scenario s = build_scenario(c.scenario, c.wind);
  DesignConfig cfg;
  cfg.budget = budget;
  cfg.sigma0 = sigma0;
  cfg.n_init = n_init;
  cfg.master_seed = c.seed;
  cfg.workers = c.workers;
  const DesignResult r = method == "cma" ? cma_search(cfg, s, s.theta_true)
                                         : random_search(cfg, s, s.theta_true);

  const fs::path dir = prepare(output_dir(c.out, c.seed));
  nlohmann::json j = design_result_to_json(r, cfg, s.id, method.c_str());
  j["wind"] = c.wind;
  write_json(dir / "design.json", j);
  auto csv = open_out(dir / "history.csv");
  write_history_csv(csv, r.history);

  out << method << " design, scenario " << s.id << (c.wind ? " (wind)" : "") << ", seed "
      << c.seed << '\n'
      << "evaluations " << r.history.size() << ", best fitness " << r.best_fitness << '\n'
      << "true-weights fitness "
      << (r.history.empty() ? std::nan("") : r.history.front().fitness) << '\n'
      << "weights";
  for (double w : r.best.w) out << ' ' << w;
  out << '\n' << "wrote " << (dir / "design.json").string() << '\n';
  return kExitOk;
}

int do_compare(const Common& c, const std::string& weights, int trials, std::ostream& out) {
  const Scenario s = build_scenario(c.scenario, c.wind);
  const CostWeights theta = load_weights(weights, s);
  const auto [base, learned] =
      compare_experiment(s, theta, trials, c.seed, c.wind ? "surrogate_plus_wind" : "surrogate",
                         c.workers);

  const fs::path dir = prepare(output_dir(c.out, c.seed));
  nlohmann::json j = compare_to_json(base, learned);
  j["wind"] = c.wind;
  write_json(dir / "compare.json", j);

  out << "scenario " << s.id << (c.wind ? " (wind)" : "") << ", " << trials << " trials, seed "
      << c.seed << '\n'
      << "true cost   mean " << base.mean << " +- " << base.std_error << '\n'
      << learned.condition << " mean " << learned.mean << " +- " << learned.std_error << '\n'
      << "reduction_pct " << learned.reduction_pct << '\n'
      << "wrote " << (dir / "compare.json").string() << '\n';
  return kExitOk;
}

int do_heatmap(const Common& c, const std::string& weights, const std::string& grid_text,
               std::ostream& out) {
  const Scenario s = build_scenario(c.scenario, false);
  const GridSpec grid = parse_grid(grid_text);
  const CostWeights theta = load_weights(weights, s);
  const CarState& robot = s.nominal_start.robot;
  const Heatmap map =
      heatmap(theta, s.road, s.v_target, grid, robot.speed, robot.heading, s.nominal_start.humans);

  const fs::path dir = prepare(output_dir(c.out, c.seed));
  auto csv = open_out(dir / "heatmap.csv");
  write_heatmap_csv(csv, map);

  const auto [lo, hi] = std::minmax_element(map.values.begin(), map.values.end());
  out << "scenario " << s.id << " heatmap " << grid.rows << "x" << grid.cols << ", cost range ["
      << *lo << ", " << *hi << "]\n"
      << "wrote " << (dir / "heatmap.csv").string() << '\n';
  return kExitOk;
}

int do_generalize(const Common& c, const std::string& n_list, int test_size, int replicates,
                  int budget, std::ostream& out) {
  const Scenario s = build_scenario(c.scenario, c.wind);
  GeneralizationConfig cfg;
  cfg.n_init_values = parse_int_list(n_list);
  cfg.test_size = test_size;
  cfg.replicates = replicates;
  cfg.master_seed = c.seed;
  cfg.budget = budget;
  cfg.workers = c.workers;
  const auto rows = generalization_experiment(s, cfg);

  const fs::path dir = prepare(output_dir(c.out, c.seed));
  write_json(dir / "generalization.json", generalization_to_json(rows, cfg, s.id));
  auto csv = open_out(dir / "generalization.csv");
  write_generalization_csv(csv, rows);

  out << "scenario " << s.id << ", test size " << test_size << ", " << replicates
      << " replicates\n";
  for (int n : cfg.n_init_values) {
    int wins = 0;
    double sum = 0.0;
    double base = 0.0;
    for (const auto& r : rows) {
      if (r.n_init == 0) base = r.mean_test_cost;
      if (r.n_init != n) continue;
      sum += r.mean_test_cost;
      if (r.mean_test_cost < base) ++wins;
    }
    out << "n_init " << n << ": mean test cost " << sum / replicates << ", beats true cost in "
        << wins << "/" << replicates << '\n';
  }
  out << "wrote " << (dir / "generalization.json").string() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cost design for model predictive control on highway driving scenarios", "ocd"};
  app.require_subcommand(1);

  Common common;
  std::string weights = "true";
  std::size_t human = 0;
  int budget = 85;
  double sigma0 = 0.05;
  int n_init = 1;
  std::string method = "cma";
  int trials = 7;
  std::string grid = "50x50";
  std::string n_list = "1,2,5,10";
  int test_size = 24;
  int replicates = 10;

  auto* sim = app.add_subcommand("simulate", "Run one closed-loop MPC rollout");
  add_scenario(sim, common);
  sim->add_option("--weights", weights, "Planning weights: JSON file or 'true'");
  sim->add_option("--seed", common.seed, "Rollout seed");
  sim->add_flag("--wind", common.wind, "Enable crosswind in the true dynamics");
  sim->add_option("--human", human, "Index of the true human behavior");
  sim->add_option("--out", common.out, "Output directory");

  auto* des = app.add_subcommand("design", "Search for surrogate cost weights");
  add_scenario(des, common);
  des->add_option("--budget", budget, "Candidate evaluations")->check(CLI::PositiveNumber);
  des->add_option("--sigma0", sigma0, "Initial CMA-ES step size")->check(CLI::PositiveNumber);
  des->add_option("--n-init", n_init, "Training start states")->check(CLI::PositiveNumber);
  des->add_option("--method", method, "cma or random")->check(CLI::IsMember({"cma", "random"}));
  des->add_option("--seed", common.seed, "Master seed");
  des->add_flag("--wind", common.wind, "Enable crosswind in the true dynamics");
  des->add_option("--workers", common.workers, "Worker threads (0 = hardware)");
  des->add_option("--out", common.out, "Output directory");

  auto* cmp = app.add_subcommand("compare", "Paired true-cost vs surrogate rollouts");
  add_scenario(cmp, common);
  cmp->add_option("--weights", weights, "Surrogate weights: JSON file or 'true'")->required();
  cmp->add_option("--trials", trials, "Paired trials")->check(CLI::PositiveNumber);
  cmp->add_option("--seed", common.seed, "Master seed");
  cmp->add_flag("--wind", common.wind, "Enable crosswind in the true dynamics");
  cmp->add_option("--workers", common.workers, "Worker threads (0 = hardware)");
  cmp->add_option("--out", common.out, "Output directory");

  auto* hm = app.add_subcommand("heatmap", "Cost over a lateral x longitudinal grid");
  add_scenario(hm, common);
  hm->add_option("--weights", weights, "Weights: JSON file or 'true'");
  hm->add_option("--grid", grid, "Grid size as RxC (rows along lon, columns along lat)");
  hm->add_option("--out", common.out, "Output directory");

  auto* gen = app.add_subcommand("generalize", "Train on n_init starts, test on held-out starts");
  add_scenario(gen, common);
  gen->add_option("--n-init-list", n_list, "Comma separated training set sizes");
  gen->add_option("--test-size", test_size, "Held-out start states")->check(CLI::PositiveNumber);
  gen->add_option("--replicates", replicates, "Replicates")->check(CLI::PositiveNumber);
  gen->add_option("--budget", budget, "Candidate evaluations per design")
      ->check(CLI::PositiveNumber);
  gen->add_option("--seed", common.seed, "Master seed");
  gen->add_flag("--wind", common.wind, "Enable crosswind in the true dynamics");
  gen->add_option("--workers", common.workers, "Worker threads (0 = hardware)");
  gen->add_option("--out", common.out, "Output directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*sim) return do_simulate(common, weights, human, out);
    if (*des) return do_design(common, budget, sigma0, n_init, method, out);
    if (*cmp) return do_compare(common, weights, trials, out);
    if (*hm) return do_heatmap(common, weights, grid, out);
    if (*gen) return do_generalize(common, n_list, test_size, replicates, budget, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace ocd::cli
