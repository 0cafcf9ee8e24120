#pragma once

// Structured-document forms of the library's results. Field names here are
// the ones frozen in docs/API.md; keys are emitted in sorted order so output
// is byte-stable.

#include <charconv>
#include <string>

#include "json.hpp"

#include "goalrec/experiment.hpp"

namespace goalrec {

using Json = nlohmann::json;

inline Json cell_json(Cell c) { return Json::array({c.row, c.col}); }

inline Json to_json(const OptCost& c) { return c.solvable() ? Json(c.value()) : Json(nullptr); }

inline Json to_json(const GoalPriorDistribution& d) { return {{"A", d.p_a}, {"B", d.p_b}}; }

inline Json to_json(const GridMap& m) {
  Json rows = Json::array();
  for (int r = 0; r < m.height; ++r) {
    std::string row;
    for (int c = 0; c < m.width; ++c) row += m.is_wall({r, c}) ? '#' : '.';
    rows.push_back(row);
  }
  Json j{{"id", m.meta.id},
         {"width", m.width},
         {"height", m.height},
         {"walls", rows},
         {"goal_a", cell_json(m.goal_a)},
         {"goal_b", cell_json(m.goal_b)},
         {"player_start", cell_json(m.player_start)},
         {"box_start", cell_json(m.box_start)},
         {"type", to_string(m.meta.instance_type)},
         {"forced_moves", actions_to_string(m.meta.forced_moves)},
         {"key_step", m.meta.key_step_index},
         {"text", print_map(m)}};
  j["pair_id"] = m.meta.pair_id ? Json(*m.meta.pair_id) : Json(nullptr);
  return j;
}

inline Json to_json(const WorldState& s) { return {{"player", cell_json(s.player)}, {"box", cell_json(s.box)}}; }

inline Json to_json(const PlannerTrace& t) {
  Json steps = Json::array();
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& s = t.steps[i];
    steps.push_back({{"step", i},
                     {"action", std::string(1, s.action ? to_char(*s.action) : 'X')},
                     {"iterations", s.iterations},
                     {"novel", s.novel_states},
                     {"closed", s.closed_size}});
  }
  return {{"outcome", to_string(t.outcome)},
          {"reason", to_string(t.reason)},
          {"total_iterations", t.total_iterations},
          {"moves", t.move_count()},
          {"final_state", to_json(t.final_state)},
          {"steps", steps}};
}

inline Json to_json(const SummaryStats& s) { return {{"count", s.count}, {"mean", s.mean}, {"std", s.std_dev}}; }

// Summary only; individual traces are left out.
inline Json to_json(const SimulationBatch& b) {
  Json outcomes = Json::object();
  for (auto o : {Outcome::Solved, Outcome::DeclaredUnsolvable, Outcome::BudgetExhausted}) {
    auto it = b.outcomes.find(o);
    outcomes[std::string(to_string(o))] = it == b.outcomes.end() ? 0 : it->second;
  }
  Json key = Json::object();
  if (b.key_step < b.step_frequencies.size()) {
    const auto& f = b.step_frequencies[b.key_step];
    key = {{"reached", f.reached}, {"U", f.counts[0]}, {"D", f.counts[1]},
           {"L", f.counts[2]},     {"R", f.counts[3]}, {"X", f.counts[kDeclareSlot]}};
  }
  return {{"goal", std::string(1, to_char(b.hypothesis))},
          {"n", b.traces.size()},
          {"key_step", b.key_step},
          {"key_step_actions", key},
          {"key_step_iterations", to_json(b.key_step_iterations)},
          {"total_iterations", to_json(b.total_iterations)},
          {"outcomes", outcomes}};
}

inline Json to_json(const LikelihoodValue& v) {
  Json j{{"action", v.ll_action}, {"combined", v.combined}};
  j["timing"] = v.ll_timing ? Json(*v.ll_timing) : Json(nullptr);
  return j;
}

inline Json to_json(const PosteriorReport& r) {
  Json steps = Json::array();
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const auto& s = r.steps[i];
    steps.push_back({{"step", i},
                     {"action", std::string(1, to_char(s.observation.action))},
                     {"think_time", s.observation.think_time},
                     {"likelihood", {{"A", to_json(s.likelihoods[0])}, {"B", to_json(s.likelihoods[1])}}},
                     {"posterior", to_json(s.posterior)}});
  }
  return {{"prior", to_json(r.prior)}, {"steps", steps}, {"posterior", to_json(r.final_posterior)}};
}

inline Json to_json(const PlannerConfig& c) {
  return {{"base_budget", c.base_budget}, {"budget_growth", c.budget_growth}, {"max_budget", c.max_budget},
          {"temperature", c.temperature}, {"stall_threshold", c.stall_threshold}, {"max_steps", c.max_steps},
          {"seed", c.seed}};
}

inline Json to_json(const ModelConfig& c) {
  return {{"prior", to_string(c.prior)},
          {"likelihood", to_string(c.likelihood)},
          {"beta", c.beta},
          {"o", c.easiness.o},
          {"c", c.easiness.c},
          {"n_sims", c.n_sims},
          {"smoothing", c.smoothing},
          {"seconds_per_iteration", c.scale.seconds_per_iteration},
          {"planner", to_json(c.planner)}};
}

namespace detail {

template <typename T>
T config_field(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorKind::InvalidConfig, std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace detail

// Missing fields keep their defaults; unknown fields are rejected so typos do
// not silently fall back.
inline PlannerConfig planner_config_from_json(const Json& j, PlannerConfig base = {}) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, "planner config must be an object");
  static const std::set<std::string> known{"base_budget", "budget_growth", "max_budget", "temperature",
                                           "stall_threshold", "max_steps", "seed"};
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw Error(ErrorKind::InvalidConfig, "unknown planner field '" + k + "'");
  }
  base.base_budget = detail::config_field(j, "base_budget", base.base_budget);
  base.budget_growth = detail::config_field(j, "budget_growth", base.budget_growth);
  base.max_budget = detail::config_field(j, "max_budget", base.max_budget);
  base.temperature = detail::config_field(j, "temperature", base.temperature);
  base.stall_threshold = detail::config_field(j, "stall_threshold", base.stall_threshold);
  base.max_steps = detail::config_field(j, "max_steps", base.max_steps);
  base.seed = detail::config_field(j, "seed", base.seed);
  return base;
}

inline ModelConfig model_config_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::InvalidConfig, "model config must be an object");
  static const std::set<std::string> known{"prior", "likelihood", "beta", "o", "c", "n_sims",
                                           "smoothing", "seconds_per_iteration", "planner"};
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw Error(ErrorKind::InvalidConfig, "unknown model field '" + k + "'");
  }
  ModelConfig c;
  if (j.contains("prior")) {
    auto p = prior_kind_from_string(detail::config_field<std::string>(j, "prior", ""));
    if (!p) throw Error(ErrorKind::InvalidConfig, "unknown prior kind");
    c.prior = *p;
  }
  if (j.contains("likelihood")) {
    auto l = likelihood_kind_from_string(detail::config_field<std::string>(j, "likelihood", ""));
    if (!l) throw Error(ErrorKind::InvalidConfig, "unknown likelihood kind");
    c.likelihood = *l;
  }
  c.beta = detail::config_field(j, "beta", c.beta);
  c.easiness.o = detail::config_field(j, "o", c.easiness.o);
  c.easiness.c = detail::config_field(j, "c", c.easiness.c);
  if (j.contains("n_sims")) {
    const auto n = detail::config_field<long long>(j, "n_sims", 0);
    if (n < 1) throw Error(ErrorKind::InvalidConfig, "n_sims must be >= 1");
    c.n_sims = static_cast<std::size_t>(n);
  }
  c.smoothing = detail::config_field(j, "smoothing", c.smoothing);
  c.scale.seconds_per_iteration = detail::config_field(j, "seconds_per_iteration", c.scale.seconds_per_iteration);
  if (j.contains("planner")) c.planner = planner_config_from_json(j["planner"]);
  c.validate();
  return c;
}

inline Json to_json(const GridReport& r) {
  Json cells = Json::array();
  for (const auto& c : r.cells) {
    Json cell{{"name", c.config.name()},
              {"prior", to_string(c.config.prior)},
              {"likelihood", to_string(c.config.likelihood)},
              {"predictions", c.predictions}};
    cell["total"] = c.total ? Json(*c.total) : Json(nullptr);
    cell["offset"] = c.offset ? Json(*c.offset) : Json(nullptr);
    cell["error"] = c.error ? Json(*c.error) : Json(nullptr);
    cells.push_back(cell);
  }
  return {{"baseline", r.baseline},
          {"responses", r.response_count},
          {"seconds_per_iteration", r.scale.seconds_per_iteration},
          {"instances", r.instance_ids},
          {"cells", cells}};
}

// Shortest text that reads back to the same double.
inline std::string format_number(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

// One row per cell; empty total/offset when the cell could not be evaluated.
inline std::string grid_csv(const GridReport& r) {
  std::ostringstream out;
  out << "cell,prior,likelihood,total,offset\n";
  for (const auto& c : r.cells) {
    out << c.config.name() << ',' << to_string(c.config.prior) << ',' << to_string(c.config.likelihood) << ','
        << (c.total ? format_number(*c.total) : "") << ',' << (c.offset ? format_number(*c.offset) : "") << '\n';
  }
  return out.str();
}

}  // namespace goalrec
