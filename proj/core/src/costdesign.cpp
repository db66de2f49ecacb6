#include "ocd/costdesign.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "ocd/errors.hpp"
#include "ocd/mpc.hpp"
#include "ocd/parallel.hpp"

namespace ocd {

void DesignConfig::validate() const {
  if (budget < 1) throw ConfigError("design: budget must be >= 1");
  if (!(sigma0 > 0.0)) throw ConfigError("design: sigma0 must be positive");
  if (n_init < 1) throw ConfigError("design: n_init must be >= 1");
}

TrainingSet make_training_set(const Scenario& s, int n, std::uint64_t seed) {
  TrainingSet ts;
  for (int j = 0; j < n; ++j) {
    const auto idx = static_cast<std::uint64_t>(j);
    Rng rng(derive_seed(seed, "start-state", idx));
    ts.states.push_back(sample_initial_state(s, rng));
    ts.seeds.push_back(derive_seed(seed, "rollout", idx));
  }
  return ts;
}

double fitness(std::span<const double, kNumFeatures> candidate, const Scenario& scenario,
               std::span<const WorldState> initial_states, const CostWeights& theta_true,
               std::span<const std::uint64_t> seeds) {
  if (initial_states.size() != seeds.size() || initial_states.empty()) {
    throw ArityError("fitness: need one seed per initial state and at least one state");
  }
  CostWeights plan;
  try {
    plan = normalize_weights(candidate);
  } catch (const NormalizationError&) {
    return kDivergedFitness;
  }
  double total = 0.0;
  for (std::size_t j = 0; j < initial_states.size(); ++j) {
    try {
      total += expected_rollout_cost(plan, theta_true, scenario, initial_states[j], seeds[j]);
    } catch (const RolloutDiverged&) {
      return kDivergedFitness;
    }
  }
  const double mean = total / static_cast<double>(initial_states.size());
  return std::isfinite(mean) ? mean : kDivergedFitness;
}

CostWeights sample_unit_weights(Rng& rng) {
  for (;;) {
    RawWeights raw{};
    for (double& x : raw) x = rng.normal();
    try {
      return normalize_weights(raw);
    } catch (const NormalizationError&) {
      // redraw
    }
  }
}

namespace {

// Evaluates a batch of raw candidates and appends them to the history.
class Evaluator {
 public:
  Evaluator(const DesignConfig& cfg, const Scenario& scenario, const CostWeights& theta_true,
            const TrainingSet* training)
      : cfg_(cfg), scenario_(scenario), theta_true_(theta_true) {
    cfg.validate();
    if (training != nullptr) {
      if (training->states.size() != training->seeds.size() || training->states.empty()) {
        throw ArityError("design: training set needs matching, non-empty states and seeds");
      }
      shared_ = *training;
    } else {
      shared_ = make_training_set(scenario, cfg.n_init, derive_seed(cfg.master_seed, "train"));
    }
  }

  int remaining() const { return cfg_.budget - static_cast<int>(result_.history.size()); }

  std::vector<double> evaluate(const std::vector<RawWeights>& batch, int generation) {
    const std::size_t first = result_.history.size();
    std::vector<double> fit(batch.size());
    std::vector<TrainingSet> sets(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      sets[i] = cfg_.common_random_numbers
                    ? shared_
                    : make_training_set(scenario_, static_cast<int>(shared_.states.size()),
                                        derive_seed(cfg_.master_seed, "fresh", first + i));
    }
    parallel_for(
        batch.size(),
        [&](std::size_t i) {
          fit[i] = fitness(batch[i], scenario_, sets[i].states, theta_true_, sets[i].seeds);
        },
        cfg_.workers);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      CandidateRecord rec;
      try {
        rec.weights = normalize_weights(batch[i]);
      } catch (const NormalizationError&) {
        rec.weights.w = batch[i];
      }
      rec.fitness = fit[i];
      rec.eval_index = static_cast<int>(first + i);
      rec.generation = generation;
      rec.rollout_seeds = sets[i].seeds;
      if (result_.history.empty() || rec.fitness < result_.best_fitness) {
        result_.best = rec.weights;
        result_.best_fitness = rec.fitness;
      }
      result_.history.push_back(std::move(rec));
    }
    return fit;
  }

  DesignResult take() { return std::move(result_); }

 private:
  const DesignConfig& cfg_;
  const Scenario& scenario_;
  const CostWeights& theta_true_;
  TrainingSet shared_;
  DesignResult result_;
};

}  // namespace

DesignResult cma_search(const DesignConfig& cfg, const Scenario& scenario,
                        const CostWeights& theta_true, const TrainingSet* training) {
  Evaluator eval(cfg, scenario, theta_true, training);
  const RawWeights mean = cfg.init_mean.value_or(theta_true.w);
  CmaEs es(mean, cfg.sigma0, derive_seed(cfg.master_seed, "cma"));
  for (int gen = 0; eval.remaining() > 0; ++gen) {
    std::vector<std::vector<double>> pop = es.ask();
    if (gen == 0 && cfg.seed_true_weights) {
      es.inject(0, theta_true.w);
      pop[0].assign(theta_true.w.begin(), theta_true.w.end());
    }
    const std::size_t take = std::min<std::size_t>(pop.size(), eval.remaining());
    std::vector<RawWeights> batch(take);
    for (std::size_t i = 0; i < take; ++i) std::copy_n(pop[i].begin(), kNumFeatures, batch[i].begin());
    const std::vector<double> fit = eval.evaluate(batch, gen);
    // A truncated final generation is recorded but does not update the search.
    if (take == pop.size()) es.tell(fit);
  }
  return eval.take();
}

DesignResult random_search(const DesignConfig& cfg, const Scenario& scenario,
                           const CostWeights& theta_true, const TrainingSet* training) {
  Evaluator eval(cfg, scenario, theta_true, training);
  Rng rng(derive_seed(cfg.master_seed, "random-search"));
  std::vector<RawWeights> batch;
  for (int i = 0; i < cfg.budget; ++i) batch.push_back(sample_unit_weights(rng).w);
  eval.evaluate(batch, 0);
  return eval.take();
}

namespace {

std::string num(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

}  // namespace

void write_history_csv(std::ostream& out, const std::vector<CandidateRecord>& history) {
  out << "eval_index,fitness";
  for (std::size_t i = 1; i <= kNumFeatures; ++i) out << ",w" << i;
  out << '\n';
  for (const CandidateRecord& r : history) {
    out << r.eval_index << ',' << num(r.fitness);
    for (double w : r.weights.w) out << ',' << num(w);
    out << '\n';
  }
}

nlohmann::json design_result_to_json(const DesignResult& r, const DesignConfig& cfg,
                                     int scenario_id, const char* method) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["scenario"] = scenario_id;
  j["method"] = method;
  j["master_seed"] = cfg.master_seed;
  j["budget"] = cfg.budget;
  j["sigma0"] = cfg.sigma0;
  j["n_init"] = cfg.n_init;
  j["evaluations"] = r.history.size();
  j["label"] = "surrogate";
  j["weights"] = r.best.w;
  if (std::isfinite(r.best_fitness)) {
    j["best_fitness"] = r.best_fitness;
  } else {
    j["best_fitness"] = nullptr;
  }
  return j;
}

// ---------------------------------------------------------------------------
// CMA-ES

struct CmaEs::Impl {
  using Vec = Eigen::VectorXd;
  using Mat = Eigen::MatrixXd;

  int n;
  Vec x0;
  double sigma0;
  Rng rng;

  int lambda = 0;
  int mu = 0;
  Vec weights;
  double mueff = 0, cc = 0, cs = 0, c1 = 0, cmu = 0, damps = 0, chin = 0;

  Vec mean;
  double sigma = 0;
  Mat C, B, invsqrtC;
  Vec D;
  Vec pc, ps;
  int generation = 0;
  int gen_since_restart = 0;
  int restarts = 0;
  std::vector<double> best_history;
  double last_range = std::numeric_limits<double>::infinity();

  std::vector<Vec> ys;  // steps of the current population, in sigma units

  Impl(std::span<const double> m, double s, std::uint64_t seed)
      : n(static_cast<int>(m.size())), x0(n), sigma0(s), rng(seed) {
    for (int i = 0; i < n; ++i) x0[i] = m[static_cast<std::size_t>(i)];
    reset(4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(n)))));
  }

  void reset(int population) {
    lambda = population;
    mu = lambda / 2;
    weights.resize(mu);
    for (int i = 0; i < mu; ++i) weights[i] = std::log(mu + 0.5) - std::log(i + 1.0);
    weights /= weights.sum();
    mueff = 1.0 / weights.squaredNorm();
    const double dn = n;
    cc = (4.0 + mueff / dn) / (dn + 4.0 + 2.0 * mueff / dn);
    cs = (mueff + 2.0) / (dn + mueff + 5.0);
    c1 = 2.0 / ((dn + 1.3) * (dn + 1.3) + mueff);
    cmu = std::min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((dn + 2.0) * (dn + 2.0) + mueff));
    damps = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (dn + 1.0)) - 1.0) + cs;
    chin = std::sqrt(dn) * (1.0 - 1.0 / (4.0 * dn) + 1.0 / (21.0 * dn * dn));

    mean = x0;
    sigma = sigma0;
    C = Mat::Identity(n, n);
    B = Mat::Identity(n, n);
    invsqrtC = Mat::Identity(n, n);
    D = Vec::Ones(n);
    pc = Vec::Zero(n);
    ps = Vec::Zero(n);
    gen_since_restart = 0;
    best_history.clear();
    last_range = std::numeric_limits<double>::infinity();
  }

  std::vector<std::vector<double>> ask() {
    ys.assign(static_cast<std::size_t>(lambda), Vec(n));
    std::vector<std::vector<double>> pop(static_cast<std::size_t>(lambda));
    for (int k = 0; k < lambda; ++k) {
      Vec z(n);
      for (int i = 0; i < n; ++i) z[i] = rng.normal();
      ys[static_cast<std::size_t>(k)] = B * D.asDiagonal() * z;
      const Vec x = mean + sigma * ys[static_cast<std::size_t>(k)];
      pop[static_cast<std::size_t>(k)].assign(x.data(), x.data() + n);
    }
    return pop;
  }

  void inject(std::size_t i, std::span<const double> x) {
    Vec v(n);
    for (int d = 0; d < n; ++d) v[d] = x[static_cast<std::size_t>(d)];
    Vec y = (v - mean) / sigma;
    // Clip the Mahalanobis length so a far-away injected point cannot
    // dominate the covariance update.
    const double len = (invsqrtC * y).norm();
    const double cap = std::sqrt(static_cast<double>(n)) + 2.0 * n / (n + 2.0);
    if (len > cap) y *= cap / len;
    ys.at(i) = y;
  }

  void tell(std::span<const double> fit) {
    if (fit.size() != static_cast<std::size_t>(lambda)) {
      throw ArityError("cma: tell() needs one fitness per population member");
    }
    std::vector<int> order(static_cast<std::size_t>(lambda));
    std::iota(order.begin(), order.end(), 0);
    auto key = [&](int k) {
      const double f = fit[static_cast<std::size_t>(k)];
      return std::isnan(f) ? std::numeric_limits<double>::infinity() : f;
    };
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key(a) < key(b); });

    Vec yw = Vec::Zero(n);
    for (int i = 0; i < mu; ++i) yw += weights[i] * ys[static_cast<std::size_t>(order[i])];
    mean += sigma * yw;

    ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mueff) * (invsqrtC * yw);
    const double psn = ps.norm();
    const double gens = gen_since_restart + 1.0;
    const bool hsig = psn / std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * gens)) / chin <
                      1.4 + 2.0 / (n + 1.0);
    pc = (1.0 - cc) * pc + (hsig ? std::sqrt(cc * (2.0 - cc) * mueff) : 0.0) * yw;

    Mat rank_mu = Mat::Zero(n, n);
    for (int i = 0; i < mu; ++i) {
      const Vec& y = ys[static_cast<std::size_t>(order[i])];
      rank_mu += weights[i] * y * y.transpose();
    }
    C = (1.0 - c1 - cmu) * C +
        c1 * (pc * pc.transpose() + (hsig ? 0.0 : cc * (2.0 - cc)) * C) + cmu * rank_mu;
    sigma *= std::exp((cs / damps) * (psn / chin - 1.0));

    C = 0.5 * (C + C.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> eig(C);
    B = eig.eigenvectors();
    D = eig.eigenvalues().cwiseMax(1e-20).cwiseSqrt();
    invsqrtC = B * D.cwiseInverse().asDiagonal() * B.transpose();

    best_history.push_back(key(order[0]));
    last_range = key(order[static_cast<std::size_t>(lambda - 1)]) - key(order[0]);
    ++generation;
    ++gen_since_restart;
  }

  bool should_restart() const {
    if (gen_since_restart == 0) return false;
    if (sigma * D.maxCoeff() < 1e-12 * sigma0) return true;
    if (D.maxCoeff() > 1e7 * D.minCoeff()) return true;
    const std::size_t window =
        10 + static_cast<std::size_t>(std::ceil(30.0 * n / static_cast<double>(lambda)));
    if (best_history.size() >= window) {
      const auto first = best_history.end() - static_cast<std::ptrdiff_t>(window);
      const auto [lo, hi] = std::minmax_element(first, best_history.end());
      if (*hi - *lo < 1e-12 && last_range < 1e-12) return true;
    }
    return false;
  }
};

CmaEs::CmaEs(std::span<const double> mean, double sigma, std::uint64_t seed)
    : impl_(std::make_unique<Impl>(mean, sigma, seed)) {
  if (mean.empty()) throw ArityError("cma: empty start vector");
  if (!(sigma > 0.0)) throw ConfigError("cma: sigma must be positive");
}
CmaEs::~CmaEs() = default;
CmaEs::CmaEs(CmaEs&&) noexcept = default;
CmaEs& CmaEs::operator=(CmaEs&&) noexcept = default;

int CmaEs::population_size() const noexcept { return impl_->lambda; }
int CmaEs::generation() const noexcept { return impl_->generation; }
int CmaEs::restarts() const noexcept { return impl_->restarts; }
double CmaEs::sigma() const noexcept { return impl_->sigma; }

std::vector<double> CmaEs::mean() const {
  return {impl_->mean.data(), impl_->mean.data() + impl_->n};
}

std::vector<std::vector<double>> CmaEs::ask() {
  if (impl_->should_restart()) {
    ++impl_->restarts;
    impl_->reset(impl_->lambda * 2);
  }
  return impl_->ask();
}

void CmaEs::inject(std::size_t i, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(impl_->n)) throw ArityError("cma: inject dimension");
  impl_->inject(i, x);
}

void CmaEs::tell(std::span<const double> fitness) { impl_->tell(fitness); }

bool CmaEs::should_restart() const { return impl_->should_restart(); }

}  // namespace ocd
