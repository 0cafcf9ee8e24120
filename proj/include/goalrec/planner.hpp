#pragma once

// Solvability-aware adaptive lookahead actor.
//
// Each decision step runs a bounded best-first lookahead (f = depth + h) from
// the current state. A goal found inside the lookahead is committed as a whole
// path; otherwise the next action is sampled by softmax over the best frontier
// f-value reachable through each first action. Node expansions are the unit of
// "thinking time". A closed set shared by the whole episode tracks which
// states the actor has already considered; the actor gives up (declares the
// goal unsolvable) when a lookahead exhausts its frontier without reaching the
// goal, or when K consecutive lookaheads turn up nothing new.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "goalrec/domain.hpp"
#include "goalrec/error.hpp"

namespace goalrec {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct PlannerConfig {
  int base_budget = 32;
  double budget_growth = 2.0;
  int max_budget = 4096;
  double temperature = 5.0;
  int stall_threshold = 3;
  int max_steps = 200;
  std::uint64_t seed = 0;

  void validate() const {
    if (base_budget < 1 || max_budget < 1 || stall_threshold < 1 || max_steps < 1) {
      throw Error(ErrorKind::InvalidConfig, "planner counts must be >= 1");
    }
    if (!(temperature > 0.0)) throw Error(ErrorKind::InvalidConfig, "temperature must be > 0");
    if (!(budget_growth >= 1.0)) throw Error(ErrorKind::InvalidConfig, "budget_growth must be >= 1");
  }

  friend bool operator==(const PlannerConfig&, const PlannerConfig&) = default;
};

enum class Outcome { Solved, DeclaredUnsolvable, BudgetExhausted };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Solved: return "Solved";
    case Outcome::DeclaredUnsolvable: return "DeclaredUnsolvable";
    case Outcome::BudgetExhausted: return "BudgetExhausted";
  }
  return "Solved";
}

enum class DeclareReason { None, FrontierExhausted, Stalled };

inline std::string_view to_string(DeclareReason r) {
  switch (r) {
    case DeclareReason::None: return "none";
    case DeclareReason::FrontierExhausted: return "frontier-exhausted";
    case DeclareReason::Stalled: return "stalled";
  }
  return "none";
}

// One recorded step. A step without an action is the final "declare
// unsolvable" decision; its iterations are the search spent before giving up.
struct TraceStep {
  WorldState state;
  std::optional<Action> action;
  int iterations = 0;
  int novel_states = 0;
  std::size_t closed_size = 0;
};

struct PlannerTrace {
  std::vector<TraceStep> steps;
  Outcome outcome = Outcome::BudgetExhausted;
  DeclareReason reason = DeclareReason::None;
  long total_iterations = 0;
  WorldState final_state;

  std::size_t move_count() const {
    return static_cast<std::size_t>(
        std::count_if(steps.begin(), steps.end(), [](const TraceStep& s) { return s.action.has_value(); }));
  }
};

// ---------------------------------------------------------------------------
// Random numbers

// mt19937_64 has a fully specified output sequence; the conversion to [0, 1)
// is done by hand because std::uniform_real_distribution is not portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
  }

 private:
  std::mt19937_64 engine_;
};

// Probabilities proportional to exp(-q / temperature); +inf entries get zero.
inline std::vector<double> softmax_probabilities(std::span<const double> q, double temperature) {
  double best = kInfinity;
  for (double v : q) best = std::min(best, v);
  std::vector<double> p(q.size(), 0.0);
  if (!std::isfinite(best)) return p;
  double total = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (std::isfinite(q[i])) {
      p[i] = std::exp(-(q[i] - best) / temperature);
      total += p[i];
    }
  }
  for (double& v : p) v /= total;
  return p;
}

inline std::size_t sample_index(std::span<const double> probabilities, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] <= 0.0) continue;
    acc += probabilities[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

// ---------------------------------------------------------------------------
// Heuristic

namespace detail {

// BFS distances from `source` over non-wall cells; -1 for unreachable.
inline std::vector<int> grid_distances(const GridMap& map, Cell source) {
  std::vector<int> dist(map.cell_count(), -1);
  std::deque<Cell> queue{source};
  dist[map.index(source)] = 0;
  while (!queue.empty()) {
    Cell c = queue.front();
    queue.pop_front();
    for (Action a : kAllActions) {
      Cell n = step(c, a);
      if (map.is_wall(n) || dist[map.index(n)] >= 0) continue;
      dist[map.index(n)] = dist[map.index(c)] + 1;
      queue.push_back(n);
    }
  }
  return dist;
}

}  // namespace detail

// h = dist(box -> goal) + max(0, dist(player -> box) - 1), both plain
// wall-aware grid distances; +inf when the box cannot reach the goal at all.
inline double heuristic(const GridMap& map, const WorldState& state, Goal hypothesis) {
  const auto from_goal = detail::grid_distances(map, map.goal_cell(hypothesis));
  const int box_to_goal = from_goal[map.index(state.box)];
  if (box_to_goal < 0) return kInfinity;
  const auto from_box = detail::grid_distances(map, state.box);
  const int player_to_box = from_box[map.index(state.player)];
  if (player_to_box < 0) return kInfinity;
  return static_cast<double>(box_to_goal + std::max(0, player_to_box - 1));
}

// Precomputed tables for one (map, hypothesis): all-pairs grid distances and
// the cells from which the box can still be pushed onto the goal when the
// player's own reachability is ignored ("live" box cells).
class SearchContext {
 public:
  SearchContext(const GridMap& map, Goal hypothesis) : map_(&map), goal_(hypothesis) {
    const std::size_t n = map.cell_count();
    distances_.assign(n * n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      if (map.walls[i]) continue;
      auto d = detail::grid_distances(map, map.cell_at(i));
      std::copy(d.begin(), d.end(), distances_.begin() + static_cast<std::ptrdiff_t>(i * n));
    }
    live_.assign(n, false);
    const Cell goal = map.goal_cell(hypothesis);
    std::deque<Cell> queue{goal};
    live_[map.index(goal)] = true;
    while (!queue.empty()) {
      Cell target = queue.front();
      queue.pop_front();
      for (Action a : kAllActions) {
        // Box at `from` pushed in direction a lands on `target`; the pusher
        // stands one further back.
        const Cell from = step(target, inverse(a));
        const Cell pusher = step(from, inverse(a));
        if (map.is_wall(from) || map.is_wall(pusher) || live_[map.index(from)]) continue;
        live_[map.index(from)] = true;
        queue.push_back(from);
      }
    }
  }

  const GridMap& map() const { return *map_; }
  Goal goal() const { return goal_; }

  int distance(Cell a, Cell b) const {
    return distances_[map_->index(a) * map_->cell_count() + map_->index(b)];
  }
  bool live_box_cell(Cell c) const { return live_[map_->index(c)]; }

  double h(const WorldState& s) const {
    const int box_to_goal = distance(s.box, map_->goal_cell(goal_));
    if (box_to_goal < 0) return kInfinity;
    const int player_to_box = distance(s.player, s.box);
    if (player_to_box < 0) return kInfinity;
    return static_cast<double>(box_to_goal + std::max(0, player_to_box - 1));
  }

 private:
  const GridMap* map_;
  Goal goal_;
  std::vector<int> distances_;
  std::vector<bool> live_;
};

// ---------------------------------------------------------------------------
// Lookahead

struct LookaheadResult {
  int expansions = 0;
  int novel_states = 0;
  std::optional<std::vector<Action>> goal_path;
  std::array<double, 4> q{kInfinity, kInfinity, kInfinity, kInfinity};
  bool frontier_exhausted = false;
  double best_frontier_h = kInfinity;
};

using ClosedSet = std::unordered_set<std::uint32_t>;

namespace detail {

struct Node {
  WorldState state;
  std::int32_t parent;
  Action action;
  Action first_action;
  int depth;
  double h;
};

struct OpenEntry {
  double f;
  std::uint64_t seq;
  std::int32_t node;
  // Min-heap on (f, insertion order).
  bool operator<(const OpenEntry& o) const { return f != o.f ? f > o.f : seq > o.seq; }
};

}  // namespace detail

// Bounded best-first search from `root`. Pushing the box from a live cell onto
// a dead one is never considered, and states with h = inf are dropped; both
// prunings only remove states from which the goal is unreachable.
inline LookaheadResult lookahead(const SearchContext& ctx, const WorldState& root, int budget,
                                 ClosedSet& closed) {
  const GridMap& map = ctx.map();
  LookaheadResult out;
  std::vector<detail::Node> nodes;
  std::vector<detail::OpenEntry> open;
  std::unordered_set<std::uint32_t> seen;
  std::uint64_t seq = 0;

  nodes.push_back({root, -1, Action::U, Action::U, 0, ctx.h(root)});
  seen.insert(encode(map, root));
  if (closed.insert(encode(map, root)).second) ++out.novel_states;
  open.push_back({nodes[0].h, seq++, 0});

  while (!open.empty()) {
    const detail::OpenEntry top = open.front();
    const detail::Node& node = nodes[static_cast<std::size_t>(top.node)];
    if (top.node != 0 && is_goal(map, node.state, ctx.goal())) {
      std::vector<Action> path;
      for (std::int32_t i = top.node; i > 0; i = nodes[static_cast<std::size_t>(i)].parent) {
        path.push_back(nodes[static_cast<std::size_t>(i)].action);
      }
      std::reverse(path.begin(), path.end());
      out.goal_path = std::move(path);
      return out;
    }
    if (out.expansions >= budget) break;
    std::pop_heap(open.begin(), open.end());
    open.pop_back();

    const detail::Node current = node;
    ++out.expansions;

    const bool box_live = ctx.live_box_cell(current.state.box);
    for (Action a : kAllActions) {
      auto next = try_apply(map, current.state, a);
      if (!next) continue;
      if (box_live && next->box != current.state.box && !ctx.live_box_cell(next->box)) continue;
      const double h = ctx.h(*next);
      if (!std::isfinite(h)) continue;
      const std::uint32_t code = encode(map, *next);
      if (!seen.insert(code).second) continue;
      if (closed.insert(code).second) ++out.novel_states;
      const Action first = current.parent < 0 ? a : current.first_action;
      nodes.push_back({*next, top.node, a, first, current.depth + 1, h});
      open.push_back({static_cast<double>(current.depth + 1) + h, seq++,
                      static_cast<std::int32_t>(nodes.size() - 1)});
      std::push_heap(open.begin(), open.end());
    }
  }

  out.frontier_exhausted = open.empty();
  for (const auto& entry : open) {
    const detail::Node& n = nodes[static_cast<std::size_t>(entry.node)];
    if (entry.node == 0) continue;
    auto& slot = out.q[static_cast<std::size_t>(n.first_action)];
    slot = std::min(slot, entry.f);
    out.best_frontier_h = std::min(out.best_frontier_h, n.h);
  }
  return out;
}

enum class DeclareDecision { Continue, DeclareUnsolvable };

// Updates the stall counter from the latest lookahead and decides whether the
// actor gives up.
inline DeclareDecision declare_check(const LookaheadResult& result, int& stall_counter, int stall_threshold) {
  if (result.novel_states > 0) {
    stall_counter = 0;
  } else {
    ++stall_counter;
  }
  if (!result.goal_path && result.frontier_exhausted) return DeclareDecision::DeclareUnsolvable;
  if (!result.goal_path && stall_counter >= stall_threshold) return DeclareDecision::DeclareUnsolvable;
  return DeclareDecision::Continue;
}

// ---------------------------------------------------------------------------
// Episodes

inline PlannerTrace plan_episode(const GridMap& map, Goal hypothesis, const PlannerConfig& config,
                                 const std::vector<Action>& forced_moves) {
  config.validate();
  const SearchContext ctx(map, hypothesis);
  Rng rng(config.seed);
  PlannerTrace trace;
  ClosedSet closed;
  WorldState current = map.start();

  auto record = [&](std::optional<Action> action, int iterations, int novel) {
    trace.steps.push_back({current, action, iterations, novel, closed.size()});
    trace.total_iterations += iterations;
  };

  for (std::size_t i = 0; i < forced_moves.size(); ++i) {
    auto next = try_apply(map, current, forced_moves[i]);
    if (!next) {
      throw Error(ErrorKind::InfeasibleForcedMoves,
                  "forced move " + std::to_string(i) + " (" + std::string(1, to_char(forced_moves[i])) +
                      ") is not executable");
    }
    closed.insert(encode(map, current));
    record(forced_moves[i], 0, 0);
    current = *next;
  }

  int budget = config.base_budget;
  int stall_counter = 0;
  double best_h = ctx.h(current);
  const auto max_steps = static_cast<std::size_t>(config.max_steps);
  while (true) {
    if (is_goal(map, current, hypothesis)) {
      trace.outcome = Outcome::Solved;
      break;
    }
    if (trace.steps.size() >= max_steps) {
      trace.outcome = Outcome::BudgetExhausted;
      break;
    }
    const LookaheadResult result = lookahead(ctx, current, budget, closed);
    if (declare_check(result, stall_counter, config.stall_threshold) == DeclareDecision::DeclareUnsolvable) {
      record(std::nullopt, result.expansions, result.novel_states);
      trace.outcome = Outcome::DeclaredUnsolvable;
      trace.reason = result.frontier_exhausted ? DeclareReason::FrontierExhausted : DeclareReason::Stalled;
      break;
    }

    const double h_before = ctx.h(current);
    if (result.goal_path) {
      bool first = true;
      for (Action a : *result.goal_path) {
        if (trace.steps.size() >= max_steps) break;
        record(a, first ? result.expansions : 0, first ? result.novel_states : 0);
        first = false;
        current = apply(map, current, a);
      }
      budget = config.base_budget;
      continue;
    }

    const auto probabilities = softmax_probabilities(result.q, config.temperature);
    const auto chosen = kAllActions[sample_index(probabilities, rng)];
    record(chosen, result.expansions, result.novel_states);
    current = apply(map, current, chosen);

    if (!(result.best_frontier_h < h_before) || result.novel_states == 0) {
      const double grown = std::ceil(static_cast<double>(budget) * config.budget_growth);
      budget = static_cast<int>(std::min(grown, static_cast<double>(config.max_budget)));
    }
    if (ctx.h(current) < best_h) {
      best_h = ctx.h(current);
      budget = config.base_budget;
    }
  }
  trace.final_state = current;
  return trace;
}

inline PlannerTrace plan_episode(const GridMap& map, Goal hypothesis, const PlannerConfig& config) {
  return plan_episode(map, hypothesis, config, map.meta.forced_moves);
}

// ---------------------------------------------------------------------------
// Batches

struct SummaryStats {
  std::size_t count = 0;
  double mean = 0.0;
  double std_dev = 0.0;  // sample standard deviation; 0 when count < 2

  static SummaryStats of(std::span<const double> xs) {
    SummaryStats s;
    s.count = xs.size();
    if (xs.empty()) return s;
    double total = 0.0;
    for (double x : xs) total += x;
    s.mean = total / static_cast<double>(xs.size());
    if (xs.size() > 1) {
      double ss = 0.0;
      for (double x : xs) ss += (x - s.mean) * (x - s.mean);
      s.std_dev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
  }
};

// Per-step choice counts: U, D, L, R and "declared" (index 4).
struct StepFrequencies {
  std::array<std::size_t, 5> counts{};
  std::size_t reached = 0;
};

inline constexpr std::size_t kDeclareSlot = 4;

struct SimulationBatch {
  Goal hypothesis = Goal::A;
  std::size_t key_step = 0;
  std::vector<PlannerTrace> traces;
  std::vector<StepFrequencies> step_frequencies;
  SummaryStats key_step_iterations;
  SummaryStats total_iterations;
  std::map<Outcome, std::size_t> outcomes;

  // Iterations spent at `step` by each trace that reached it.
  std::vector<double> iterations_at(std::size_t step) const {
    std::vector<double> xs;
    for (const auto& t : traces) {
      if (step < t.steps.size()) xs.push_back(static_cast<double>(t.steps[step].iterations));
    }
    return xs;
  }
};

inline SimulationBatch summarize(Goal hypothesis, std::size_t key_step, std::vector<PlannerTrace> traces) {
  SimulationBatch batch;
  batch.hypothesis = hypothesis;
  batch.key_step = key_step;
  batch.traces = std::move(traces);
  std::vector<double> totals;
  for (const auto& t : batch.traces) {
    if (batch.step_frequencies.size() < t.steps.size()) batch.step_frequencies.resize(t.steps.size());
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
      auto& f = batch.step_frequencies[i];
      ++f.reached;
      ++f.counts[t.steps[i].action ? static_cast<std::size_t>(*t.steps[i].action) : kDeclareSlot];
    }
    totals.push_back(static_cast<double>(t.total_iterations));
    ++batch.outcomes[t.outcome];
  }
  const auto key = batch.iterations_at(key_step);
  batch.key_step_iterations = SummaryStats::of(key);
  batch.total_iterations = SummaryStats::of(totals);
  return batch;
}

// Runs n episodes with seeds seed+0 .. seed+(n-1). Episodes run in parallel;
// the result depends only on (map, hypothesis, config, n).
inline SimulationBatch simulate_batch(const GridMap& map, Goal hypothesis, const PlannerConfig& config,
                                      std::size_t n, unsigned jobs = 0) {
  if (n == 0) throw Error(ErrorKind::InvalidConfig, "simulation count must be >= 1");
  config.validate();
  std::vector<PlannerTrace> traces(n);
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  auto run = [&](std::size_t worker) {
    for (std::size_t i = worker; i < n; i += jobs) {
      PlannerConfig c = config;
      c.seed = config.seed + i;
      traces[i] = plan_episode(map, hypothesis, c);
    }
  };
  if (jobs <= 1) {
    run(0);
  } else {
    std::vector<std::jthread> workers;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          run(w);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    workers.clear();
    if (failure) std::rethrow_exception(failure);
  }
  return summarize(hypothesis, map.meta.key_step_index, std::move(traces));
}

// Line-delimited trace records, one JSON object per step:
// {"step":i,"action":"U"|"X","iterations":n,"novel":n,"closed":n}
// where "X" marks the final declare-unsolvable decision.
inline std::string export_trace_lines(const PlannerTrace& trace) {
  std::ostringstream out;
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    out << "{\"step\":" << i << ",\"action\":\"" << (s.action ? to_char(*s.action) : 'X')
        << "\",\"iterations\":" << s.iterations << ",\"novel\":" << s.novel_states
        << ",\"closed\":" << s.closed_size << "}\n";
  }
  return out.str();
}

}  // namespace goalrec
