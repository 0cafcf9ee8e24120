#pragma once

// Exact breadth-first planning over the (player, box) state space. Serves as
// ground truth for optimal costs, solvability and the cost pairs used by the
// offline likelihood.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "goalrec/domain.hpp"

namespace goalrec {

class OptCost {
 public:
  static OptCost finite(int steps) { return OptCost(steps); }
  static OptCost unsolvable() { return OptCost(); }

  bool solvable() const { return steps_.has_value(); }
  int value() const { return steps_.value(); }
  // Unsolvable maps to +inf.
  double as_double() const {
    return steps_ ? static_cast<double>(*steps_) : std::numeric_limits<double>::infinity();
  }

  std::string to_string() const {
    return steps_ ? "Finite " + std::to_string(*steps_) : std::string("Unsolvable");
  }

  friend bool operator==(const OptCost&, const OptCost&) = default;
  friend std::strong_ordering operator<=>(const OptCost& a, const OptCost& b) {
    if (a.solvable() != b.solvable()) {
      return a.solvable() ? std::strong_ordering::less : std::strong_ordering::greater;
    }
    if (!a.solvable()) return std::strong_ordering::equal;
    return a.value() <=> b.value();
  }

 private:
  OptCost() = default;
  explicit OptCost(int steps) : steps_(steps) {}
  std::optional<int> steps_;
};

struct Plan {
  std::vector<Action> actions;
};

struct ConstrainedCosts {
  OptCost cost_comply = OptCost::unsolvable();
  OptCost cost_defy = OptCost::unsolvable();
};

namespace detail {

inline constexpr std::int32_t kUnvisited = -1;

struct BfsResult {
  std::vector<std::int32_t> dist;      // per state code, kUnvisited if unreached
  std::vector<std::uint32_t> parent;   // state code of predecessor
  std::vector<std::uint8_t> via;       // action taken from parent
  std::optional<std::uint32_t> found;  // first goal state popped
  std::size_t visited = 0;
};

// BFS from `from`; stops at the first goal state when `goal` is set, otherwise
// explores the whole reachable space. Actions expand in U, D, L, R order.
inline BfsResult bfs(const GridMap& map, const WorldState& from, std::optional<Goal> goal) {
  const std::size_t n = map.cell_count();
  BfsResult r;
  r.dist.assign(n * n, kUnvisited);
  r.parent.assign(n * n, 0);
  r.via.assign(n * n, 0);

  std::deque<std::uint32_t> queue;
  const std::uint32_t start = encode(map, from);
  r.dist[start] = 0;
  r.visited = 1;
  queue.push_back(start);
  while (!queue.empty()) {
    const std::uint32_t code = queue.front();
    queue.pop_front();
    const WorldState s = decode(map, code);
    if (goal && is_goal(map, s, *goal)) {
      r.found = code;
      return r;
    }
    for (Action a : kAllActions) {
      auto next = try_apply(map, s, a);
      if (!next) continue;
      const std::uint32_t nc = encode(map, *next);
      if (r.dist[nc] != kUnvisited) continue;
      r.dist[nc] = r.dist[code] + 1;
      r.parent[nc] = code;
      r.via[nc] = static_cast<std::uint8_t>(a);
      ++r.visited;
      queue.push_back(nc);
    }
  }
  return r;
}

}  // namespace detail

inline OptCost opt_cost(const GridMap& map, Goal hypothesis, const WorldState& from) {
  auto r = detail::bfs(map, from, hypothesis);
  return r.found ? OptCost::finite(r.dist[*r.found]) : OptCost::unsolvable();
}

inline OptCost opt_cost(const GridMap& map, Goal hypothesis) {
  return opt_cost(map, hypothesis, map.start());
}

// Shortest plan to the hypothesis goal, or nullopt when unsolvable.
inline std::optional<Plan> optimal_plan(const GridMap& map, Goal hypothesis) {
  auto r = detail::bfs(map, map.start(), hypothesis);
  if (!r.found) return std::nullopt;
  Plan plan;
  const std::uint32_t start = encode(map, map.start());
  for (std::uint32_t code = *r.found; code != start; code = r.parent[code]) {
    plan.actions.push_back(static_cast<Action>(r.via[code]));
  }
  std::reverse(plan.actions.begin(), plan.actions.end());
  return plan;
}

inline std::size_t reachable_state_count(const GridMap& map) {
  return detail::bfs(map, map.start(), std::nullopt).visited;
}

// Cost of the cheapest plan that has `obs_actions` as a prefix (comply) and of
// the cheapest plan that does not (defy). A plan that stops on the goal before
// the observed prefix is complete counts as defying it. With an empty prefix
// every plan complies, so cost_defy is Unsolvable.
inline ConstrainedCosts constrained_costs(const GridMap& map, Goal hypothesis,
                                          const std::vector<Action>& obs_actions) {
  const std::size_t m = obs_actions.size();
  std::vector<WorldState> along;
  along.reserve(m + 1);
  along.push_back(map.start());
  for (std::size_t k = 0; k < m; ++k) {
    auto next = try_apply(map, along.back(), obs_actions[k]);
    if (!next) {
      throw Error(ErrorKind::InfeasibleObservation,
                  "action " + std::string(1, to_char(obs_actions[k])) + " at step " +
                      std::to_string(k) + " is not executable");
    }
    along.push_back(*next);
  }

  ConstrainedCosts out;
  const OptCost rest = opt_cost(map, hypothesis, along.back());
  if (rest.solvable()) out.cost_comply = OptCost::finite(static_cast<int>(m) + rest.value());

  // Deviating plans leave the observed path at some step k < m. Sources enter
  // the search with different offsets, so this is a unit-weight Dijkstra.
  const std::size_t n = map.cell_count();
  std::vector<std::int32_t> best(n * n, std::numeric_limits<std::int32_t>::max());
  using Entry = std::pair<std::int32_t, std::uint32_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::optional<int> defy;
  for (std::size_t k = 0; k < m; ++k) {
    if (k > 0 && is_goal(map, along[k], hypothesis)) {
      defy = defy ? std::min(*defy, static_cast<int>(k)) : static_cast<int>(k);
    }
    for (Action a : kAllActions) {
      if (a == obs_actions[k]) continue;
      auto next = try_apply(map, along[k], a);
      if (!next) continue;
      const auto cost = static_cast<std::int32_t>(k + 1);
      const std::uint32_t code = encode(map, *next);
      if (cost < best[code]) {
        best[code] = cost;
        open.emplace(cost, code);
      }
    }
  }
  while (!open.empty()) {
    auto [cost, code] = open.top();
    open.pop();
    if (cost != best[code]) continue;
    if (defy && cost >= *defy) break;
    const WorldState s = decode(map, code);
    if (is_goal(map, s, hypothesis)) {
      defy = cost;
      break;
    }
    for (Action a : kAllActions) {
      auto next = try_apply(map, s, a);
      if (!next) continue;
      const std::uint32_t nc = encode(map, *next);
      if (cost + 1 < best[nc]) {
        best[nc] = cost + 1;
        open.emplace(cost + 1, nc);
      }
    }
  }
  if (defy) out.cost_defy = OptCost::finite(*defy);
  return out;
}

}  // namespace goalrec
