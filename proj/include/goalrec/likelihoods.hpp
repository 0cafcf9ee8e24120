#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "goalrec/data.hpp"
#include "goalrec/planner.hpp"
#include "goalrec/solver.hpp"

namespace goalrec {

inline constexpr double kDefaultSmoothing = 0.025;
inline constexpr double kUnsolvableOfflineLikelihood = 0.025;
inline constexpr double kIterationStdFloor = 1.0;
// Large enough that a Gaussian density in seconds never exceeds 1.
inline constexpr double kSecondsStdFloor = 0.4;

struct LikelihoodValue {
  double ll_action = 0.0;
  std::optional<double> ll_timing;
  double combined = 0.0;

  static LikelihoodValue action_only(double a) { return {a, std::nullopt, a}; }
  static LikelihoodValue with_timing(double a, double t) { return {a, t, a * t}; }
  friend bool operator==(const LikelihoodValue&, const LikelihoodValue&) = default;
};

struct TimingScale {
  // Chosen so that typical key-step iteration counts of the default planner
  // land in the range of human think times (a few seconds).
  double seconds_per_iteration = 0.1;

  double to_iterations(double seconds) const { return seconds / seconds_per_iteration; }
  double to_seconds(double iterations) const { return iterations * seconds_per_iteration; }
  void validate() const {
    if (!(seconds_per_iteration > 0.0) || !std::isfinite(seconds_per_iteration)) {
      throw Error(ErrorKind::InvalidConfig, "seconds_per_iteration must be positive");
    }
  }
  friend bool operator==(const TimingScale&, const TimingScale&) = default;
};

struct GaussianTimingModel {
  double mean = 0.0;
  double std = 1.0;

  double density(double x) const {
    const double z = (x - mean) / std;
    return std::exp(-0.5 * z * z) / (std * std::sqrt(2.0 * std::numbers::pi));
  }
};

inline double sigmoid_likelihood(const OptCost& comply, const OptCost& defy, double beta) {
  if (comply == defy) return 0.5;  // covers both infinite
  const double delta = comply.as_double() - defy.as_double();
  return 1.0 / (1.0 + std::exp(beta * delta));
}

inline LikelihoodValue offline_likelihood(const GridMap& map, Goal hypothesis, const std::vector<Action>& obs_actions,
                                          double beta = 1.0) {
  const auto costs = constrained_costs(map, hypothesis, obs_actions);
  if (!opt_cost(map, hypothesis).solvable()) return LikelihoodValue::action_only(kUnsolvableOfflineLikelihood);
  return LikelihoodValue::action_only(sigmoid_likelihood(costs.cost_comply, costs.cost_defy, beta));
}

namespace detail {

inline const StepFrequencies& reached_step(const SimulationBatch& batch, std::size_t step) {
  if (batch.traces.empty()) throw Error(ErrorKind::InvalidArgument, "empty simulation batch");
  if (step >= batch.step_frequencies.size() || batch.step_frequencies[step].reached == 0) {
    throw Error(ErrorKind::NoTraceReachesStep, "no simulated trace reaches step " + std::to_string(step));
  }
  return batch.step_frequencies[step];
}

}  // namespace detail

inline double online_action_likelihood(const SimulationBatch& batch, std::size_t step, Action observed) {
  const auto& f = detail::reached_step(batch, step);
  return static_cast<double>(f.counts[static_cast<std::size_t>(observed)]) / static_cast<double>(f.reached);
}

inline GaussianTimingModel online_timing_model(const SimulationBatch& batch, std::size_t step) {
  detail::reached_step(batch, step);
  const auto xs = batch.iterations_at(step);
  const auto stats = SummaryStats::of(xs);
  return {stats.mean, std::max(stats.std_dev, kIterationStdFloor)};
}

inline double online_timing_likelihood(const SimulationBatch& batch, std::size_t step, double observed_seconds,
                                       const TimingScale& scale) {
  return online_timing_model(batch, step).density(scale.to_iterations(observed_seconds));
}

// Human episodes for (map, goal) that reached `step` without having stopped.
inline std::vector<const SolveRecord*> human_steps_at(const SolveDataset& data, std::string_view map_id, Goal goal,
                                                      std::size_t step) {
  const auto eps = episodes_for(data, map_id, goal);
  if (eps.empty()) {
    throw Error(ErrorKind::MissingData, "no solve records for map " + std::string(map_id) + " goal " + to_char(goal));
  }
  std::vector<const SolveRecord*> out;
  for (const auto& r : data.records) {
    if (r.map_id == map_id && r.goal == goal && r.step_index == step) out.push_back(&r);
  }
  return out;
}

inline LikelihoodValue empirical_likelihood(const SolveDataset& data, std::string_view map_id, Goal hypothesis,
                                            std::size_t step, Action observed,
                                            std::optional<double> observed_seconds) {
  const auto rows = human_steps_at(data, map_id, hypothesis, step);
  if (rows.empty()) {
    throw Error(ErrorKind::MissingData, "no human episode for map " + std::string(map_id) + " goal " +
                                            to_char(hypothesis) + " reaches step " + std::to_string(step));
  }
  std::size_t hits = 0;
  std::vector<double> seconds;
  for (const auto* r : rows) {
    if (r->action == observed) ++hits;
    seconds.push_back(static_cast<double>(r->think_time_ms) / 1000.0);
  }
  const double action = static_cast<double>(hits) / static_cast<double>(rows.size());
  if (!observed_seconds) return LikelihoodValue::action_only(action);
  const auto stats = SummaryStats::of(seconds);
  const GaussianTimingModel model{stats.mean, std::max(stats.std_dev, kSecondsStdFloor)};
  return LikelihoodValue::with_timing(action, model.density(*observed_seconds));
}

inline std::vector<double> combine(const std::vector<LikelihoodValue>& per_goal, double smoothing = kDefaultSmoothing) {
  std::vector<double> out;
  out.reserve(per_goal.size());
  for (const auto& v : per_goal) out.push_back(v.combined + smoothing);
  return out;
}

using BatchSet = std::map<std::pair<std::string, Goal>, std::shared_ptr<const SimulationBatch>>;

// Seconds per iteration that preserves total planning time: the sum over
// shared (map, goal) pairs of mean human episode time, divided by the sum of
// mean simulated episode iterations. Means rather than raw sums keep the
// result independent of how many participants or simulations each pair has.
inline TimingScale calibrate_scale(const SolveDataset& data, const BatchSet& batches) {
  double seconds = 0.0;
  double iterations = 0.0;
  bool overlap = false;
  for (const auto& [key, batch] : batches) {
    const auto eps = episodes_for(data, key.first, key.second);
    if (eps.empty() || !batch || batch->traces.empty()) continue;
    overlap = true;
    double s = 0.0;
    for (const auto& ep : eps) s += ep.total_seconds();
    seconds += s / static_cast<double>(eps.size());
    iterations += batch->total_iterations.mean;
  }
  if (!overlap) throw Error(ErrorKind::EmptyOverlap, "solve data and simulations share no (map, goal) pair");
  if (!(seconds > 0.0) || !(iterations > 0.0)) {
    throw Error(ErrorKind::DegenerateInput, "cannot calibrate a timing scale from zero totals");
  }
  return {seconds / iterations};
}

}  // namespace goalrec
