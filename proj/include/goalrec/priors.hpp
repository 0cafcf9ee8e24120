#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>

#include "goalrec/data.hpp"
#include "goalrec/solver.hpp"

namespace goalrec {

struct GoalPriorDistribution {
  double p_a = 0.5;
  double p_b = 0.5;

  double operator[](Goal g) const { return g == Goal::A ? p_a : p_b; }
  friend bool operator==(const GoalPriorDistribution&, const GoalPriorDistribution&) = default;
};

// Nonnegative fraction in lowest terms. Only what the easiness prior needs.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational of(std::int64_t n, std::int64_t d) {
    const std::int64_t g = std::gcd(n, d);
    return {n / g, d / g};
  }
  // Both parts stay far below 2^53, so this is the correctly rounded value.
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

struct EasinessParams {
  int o = 5;
  int c = 26;

  void validate() const {
    if (o <= 0 || c <= 0) throw Error(ErrorKind::InvalidConfig, "easiness parameters must be positive");
  }
  friend bool operator==(const EasinessParams&, const EasinessParams&) = default;
};

struct ExactPrior {
  Rational p_a;
  Rational p_b;
};

inline GoalPriorDistribution uniform_prior() { return {0.5, 0.5}; }

inline std::int64_t difficulty_score(const OptCost& cost, const EasinessParams& params) {
  const int capped = cost.solvable() ? std::min(params.c, cost.value()) : params.c;
  return params.o + capped;
}

// Each goal gets the other goal's share of the combined difficulty.
inline ExactPrior easiness_prior_exact(const OptCost& opt_a, const OptCost& opt_b, const EasinessParams& params) {
  params.validate();
  const std::int64_t s_a = difficulty_score(opt_a, params);
  const std::int64_t s_b = difficulty_score(opt_b, params);
  return {Rational::of(s_b, s_a + s_b), Rational::of(s_a, s_a + s_b)};
}

inline GoalPriorDistribution easiness_prior(const OptCost& opt_a, const OptCost& opt_b, const EasinessParams& params) {
  auto exact = easiness_prior_exact(opt_a, opt_b, params);
  return {exact.p_a.to_double(), exact.p_b.to_double()};
}

inline GoalPriorDistribution easiness_prior(const GridMap& map, const EasinessParams& params = {}) {
  return easiness_prior(opt_cost(map, Goal::A), opt_cost(map, Goal::B), params);
}

// Mean solving time per goal, with declared-unsolvable episodes charged the
// longest episode time found anywhere in the dataset.
inline double mean_solve_seconds(const SolveDataset& data, std::string_view map_id, Goal goal, double dataset_max) {
  const auto eps = episodes_for(data, map_id, goal);
  if (eps.empty()) {
    throw Error(ErrorKind::MissingData, "no solve records for map " + std::string(map_id) + " goal " + to_char(goal));
  }
  double total = 0.0;
  for (const auto& ep : eps) {
    total += ep.outcome == Outcome::DeclaredUnsolvable ? dataset_max : ep.total_seconds();
  }
  return total / static_cast<double>(eps.size());
}

inline double dataset_max_seconds(const SolveDataset& data) {
  std::map<std::tuple<std::string, std::string, Goal>, long> totals;
  for (const auto& r : data.records) totals[{r.participant_id, r.map_id, r.goal}] += r.think_time_ms;
  long best = 0;
  for (const auto& [key, ms] : totals) best = std::max(best, ms);
  return static_cast<double>(best) / 1000.0;
}

inline GoalPriorDistribution empirical_prior(const SolveDataset& data, std::string_view map_id) {
  const double max_s = dataset_max_seconds(data);
  // Episodes with no recorded time at all are clamped to one millisecond.
  const double t_a = std::max(mean_solve_seconds(data, map_id, Goal::A, max_s), 0.001);
  const double t_b = std::max(mean_solve_seconds(data, map_id, Goal::B, max_s), 0.001);
  // 1/t_a : 1/t_b normalizes to t_b : t_a.
  return {t_b / (t_a + t_b), t_a / (t_a + t_b)};
}

}  // namespace goalrec
