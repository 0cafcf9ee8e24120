#pragma once

#include <array>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "goalrec/likelihoods.hpp"
#include "goalrec/priors.hpp"

namespace goalrec {

enum class PriorKind { Uniform, Easiness, Empirical };
enum class LikelihoodKind { Offline, Online, OnlineActionOnly, Empirical, EmpiricalActionOnly };

inline constexpr std::array<PriorKind, 3> kAllPriorKinds{PriorKind::Uniform, PriorKind::Easiness, PriorKind::Empirical};
inline constexpr std::array<LikelihoodKind, 5> kAllLikelihoodKinds{
    LikelihoodKind::Offline, LikelihoodKind::Online, LikelihoodKind::OnlineActionOnly, LikelihoodKind::Empirical,
    LikelihoodKind::EmpiricalActionOnly};

inline std::string_view to_string(PriorKind k) {
  switch (k) {
    case PriorKind::Uniform: return "uniform";
    case PriorKind::Easiness: return "easiness";
    case PriorKind::Empirical: return "empirical";
  }
  return "uniform";
}

inline std::string_view to_string(LikelihoodKind k) {
  switch (k) {
    case LikelihoodKind::Offline: return "offline";
    case LikelihoodKind::Online: return "online";
    case LikelihoodKind::OnlineActionOnly: return "online-action";
    case LikelihoodKind::Empirical: return "empirical";
    case LikelihoodKind::EmpiricalActionOnly: return "empirical-action";
  }
  return "offline";
}

inline std::optional<PriorKind> prior_kind_from_string(std::string_view s) {
  for (auto k : kAllPriorKinds) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

inline std::optional<LikelihoodKind> likelihood_kind_from_string(std::string_view s) {
  for (auto k : kAllLikelihoodKinds) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

inline bool uses_simulation(LikelihoodKind k) {
  return k == LikelihoodKind::Online || k == LikelihoodKind::OnlineActionOnly;
}
inline bool uses_solve_data(LikelihoodKind k) {
  return k == LikelihoodKind::Empirical || k == LikelihoodKind::EmpiricalActionOnly;
}
inline bool uses_timing(LikelihoodKind k) { return k == LikelihoodKind::Online || k == LikelihoodKind::Empirical; }

struct ModelConfig {
  PriorKind prior = PriorKind::Uniform;
  LikelihoodKind likelihood = LikelihoodKind::Offline;
  double beta = 1.0;
  EasinessParams easiness;
  PlannerConfig planner;
  std::size_t n_sims = 100;
  double smoothing = kDefaultSmoothing;
  TimingScale scale;

  void validate() const {
    if (n_sims < 1) throw Error(ErrorKind::InvalidConfig, "n_sims must be >= 1");
    if (!(smoothing >= 0.0)) throw Error(ErrorKind::InvalidConfig, "smoothing must be >= 0");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw Error(ErrorKind::InvalidConfig, "beta must be positive");
    easiness.validate();
    planner.validate();
    scale.validate();
  }
  std::string name() const { return std::string(to_string(prior)) + "+" + std::string(to_string(likelihood)); }
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct StepReport {
  Observation observation;
  std::array<LikelihoodValue, 2> likelihoods;  // indexed by Goal
  GoalPriorDistribution posterior;
};

struct PosteriorReport {
  GoalPriorDistribution prior;
  std::vector<StepReport> steps;
  GoalPriorDistribution final_posterior;
};

inline GoalPriorDistribution posterior(const GoalPriorDistribution& prior, const std::array<double, 2>& lls) {
  const double a = prior.p_a * lls[0];
  const double b = prior.p_b * lls[1];
  const double total = a + b;
  if (!(total > 0.0)) throw Error(ErrorKind::AllZeroMass, "prior times likelihood is zero for both goals");
  return {a / total, b / total};
}

// Process-wide store of simulation batches. A batch is computed once per key;
// concurrent requests for a key being computed wait for the same result.
class BatchCache {
 public:
  explicit BatchCache(unsigned jobs = 0) : jobs_(jobs) {}

  std::shared_ptr<const SimulationBatch> get(const GridMap& map, Goal goal, const PlannerConfig& config,
                                             std::size_t n) {
    Key key{print_map(map), goal, config_key(config), n};
    std::shared_future<Ptr> future;
    std::promise<Ptr> promise;
    bool owner = false;
    {
      std::lock_guard lock(mutex_);
      auto it = entries_.find(key);
      if (it == entries_.end()) {
        future = promise.get_future().share();
        entries_.emplace(key, future);
        owner = true;
      } else {
        future = it->second;
      }
    }
    if (owner) {
      try {
        promise.set_value(std::make_shared<const SimulationBatch>(simulate_batch(map, goal, config, n, jobs_)));
      } catch (...) {
        {
          std::lock_guard lock(mutex_);
          entries_.erase(key);
        }
        promise.set_exception(std::current_exception());
      }
    }
    return future.get();
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

 private:
  using Ptr = std::shared_ptr<const SimulationBatch>;
  using ConfigKey = std::tuple<int, double, int, double, int, int, std::uint64_t>;
  using Key = std::tuple<std::string, Goal, ConfigKey, std::size_t>;

  static ConfigKey config_key(const PlannerConfig& c) {
    return {c.base_budget, c.budget_growth, c.max_budget, c.temperature, c.stall_threshold, c.max_steps, c.seed};
  }

  unsigned jobs_;
  mutable std::mutex mutex_;
  std::map<Key, std::shared_future<Ptr>> entries_;
};

// Inputs beyond the map and observations. Empirical kinds need solve data;
// online kinds use the cache when given, otherwise a private one.
struct RecognitionContext {
  const SolveDataset* solve_data = nullptr;
  BatchCache* cache = nullptr;
};

inline GoalPriorDistribution build_prior(const GridMap& map, const ModelConfig& config, const RecognitionContext& ctx) {
  switch (config.prior) {
    case PriorKind::Uniform: return uniform_prior();
    case PriorKind::Easiness: return easiness_prior(map, config.easiness);
    case PriorKind::Empirical:
      if (!ctx.solve_data) throw Error(ErrorKind::MissingData, "empirical prior needs solve data");
      return empirical_prior(*ctx.solve_data, map.meta.id);
  }
  return uniform_prior();
}

// Prior times the accumulated likelihood of the observations. Offline
// likelihoods score the whole observed prefix at once; the other kinds multiply
// per-step terms, with timing used only at the key step. Smoothing is added
// once to each goal's accumulated likelihood, which keeps every posterior
// strictly inside (0, 1).
inline PosteriorReport recognize(const GridMap& map, const ObservationSequence& observations,
                                 const ModelConfig& config, const RecognitionContext& ctx = {}) {
  config.validate();
  PosteriorReport report;
  report.prior = build_prior(map, config, ctx);
  report.final_posterior = report.prior;
  if (observations.empty()) return report;

  std::vector<Action> prefix;
  prefix.reserve(observations.size());
  {
    WorldState s = map.start();
    for (std::size_t i = 0; i < observations.size(); ++i) {
      auto next = try_apply(map, s, observations[i].action);
      if (!next) {
        throw Error(ErrorKind::InfeasibleObservation, "observation " + std::to_string(i) + " (" +
                                                          std::string(1, to_char(observations[i].action)) +
                                                          ") is not executable");
      }
      s = *next;
      prefix.push_back(observations[i].action);
    }
  }

  const auto kind = config.likelihood;
  std::array<std::shared_ptr<const SimulationBatch>, 2> batches;
  BatchCache local;
  if (uses_simulation(kind)) {
    BatchCache& cache = ctx.cache ? *ctx.cache : local;
    for (Goal g : kBothGoals) {
      batches[static_cast<std::size_t>(g)] = cache.get(map, g, config.planner, config.n_sims);
    }
  }
  if (uses_solve_data(kind) && !ctx.solve_data) throw Error(ErrorKind::MissingData, "empirical likelihood needs solve data");

  const std::size_t key_step = map.meta.key_step_index;
  std::array<double, 2> raw{1.0, 1.0};
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const Observation& obs = observations[i];
    const bool timed = uses_timing(kind) && i == key_step;
    StepReport step;
    step.observation = obs;
    for (Goal g : kBothGoals) {
      const auto gi = static_cast<std::size_t>(g);
      LikelihoodValue v;
      switch (kind) {
        case LikelihoodKind::Offline: {
          const std::vector<Action> seen(prefix.begin(), prefix.begin() + static_cast<std::ptrdiff_t>(i + 1));
          v = offline_likelihood(map, g, seen, config.beta);
          raw[gi] = v.combined;
          break;
        }
        case LikelihoodKind::Online:
        case LikelihoodKind::OnlineActionOnly: {
          const auto& batch = *batches[gi];
          const bool reached = i < batch.step_frequencies.size() && batch.step_frequencies[i].reached > 0;
          if (!reached) {
            // No simulated actor got this far: the observation is unexplained.
            v = timed ? LikelihoodValue::with_timing(0.0, 0.0) : LikelihoodValue::action_only(0.0);
          } else {
            const double a = online_action_likelihood(batch, i, obs.action);
            v = timed ? LikelihoodValue::with_timing(a, online_timing_likelihood(batch, i, obs.think_time, config.scale))
                      : LikelihoodValue::action_only(a);
          }
          raw[gi] *= v.combined;
          break;
        }
        case LikelihoodKind::Empirical:
        case LikelihoodKind::EmpiricalActionOnly: {
          const auto rows = human_steps_at(*ctx.solve_data, map.meta.id, g, i);
          if (rows.empty()) {
            v = timed ? LikelihoodValue::with_timing(0.0, 0.0) : LikelihoodValue::action_only(0.0);
          } else {
            v = empirical_likelihood(*ctx.solve_data, map.meta.id, g, i, obs.action,
                                     timed ? std::optional<double>(obs.think_time) : std::nullopt);
          }
          raw[gi] *= v.combined;
          break;
        }
      }
      step.likelihoods[gi] = v;
    }
    step.posterior = posterior(report.prior, {raw[0] + config.smoothing, raw[1] + config.smoothing});
    report.steps.push_back(step);
  }
  report.final_posterior = report.steps.back().posterior;
  return report;
}

}  // namespace goalrec
