#pragma once

// Single-box Sokoban world model: map text format, cells, states and the
// deterministic push transition.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "goalrec/error.hpp"

namespace goalrec {

// (row, col), 0-indexed, row 0 at the top.
struct Cell {
  int row = 0;
  int col = 0;

  friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
};

enum class Action : std::uint8_t { U = 0, D = 1, L = 2, R = 3 };

inline constexpr std::array<Action, 4> kAllActions{Action::U, Action::D, Action::L, Action::R};

inline constexpr char to_char(Action a) {
  constexpr std::array<char, 4> names{'U', 'D', 'L', 'R'};
  return names[static_cast<std::size_t>(a)];
}

inline std::optional<Action> action_from_char(char c) {
  switch (c) {
    case 'U': return Action::U;
    case 'D': return Action::D;
    case 'L': return Action::L;
    case 'R': return Action::R;
    default: return std::nullopt;
  }
}

inline constexpr Cell offset(Action a) {
  switch (a) {
    case Action::U: return {-1, 0};
    case Action::D: return {1, 0};
    case Action::L: return {0, -1};
    case Action::R: return {0, 1};
  }
  return {0, 0};
}

inline constexpr Cell step(Cell c, Action a) {
  const Cell d = offset(a);
  return {c.row + d.row, c.col + d.col};
}

inline constexpr Action inverse(Action a) {
  switch (a) {
    case Action::U: return Action::D;
    case Action::D: return Action::U;
    case Action::L: return Action::R;
    case Action::R: return Action::L;
  }
  return a;
}

inline std::string actions_to_string(const std::vector<Action>& actions) {
  std::string out;
  out.reserve(actions.size());
  for (Action a : actions) out.push_back(to_char(a));
  return out;
}

inline std::vector<Action> actions_from_string(std::string_view text) {
  std::vector<Action> out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    auto a = action_from_char(text[i]);
    if (!a) {
      throw Error(ErrorKind::InvalidArgument,
                  "invalid action character '" + std::string(1, text[i]) + "' at offset " +
                      std::to_string(i));
    }
    out.push_back(*a);
  }
  return out;
}

enum class Goal : std::uint8_t { A = 0, B = 1 };

inline constexpr std::array<Goal, 2> kBothGoals{Goal::A, Goal::B};

inline constexpr char to_char(Goal g) { return g == Goal::A ? 'A' : 'B'; }
inline constexpr Goal other(Goal g) { return g == Goal::A ? Goal::B : Goal::A; }

inline std::optional<Goal> goal_from_string(std::string_view s) {
  if (s == "A" || s == "a") return Goal::A;
  if (s == "B" || s == "b") return Goal::B;
  return std::nullopt;
}

enum class InstanceType { Prior, Action, EasyGoal, CompetingPath, Filler };

inline std::string_view to_string(InstanceType t) {
  switch (t) {
    case InstanceType::Prior: return "prior";
    case InstanceType::Action: return "action";
    case InstanceType::EasyGoal: return "easy-goal";
    case InstanceType::CompetingPath: return "competing-path";
    case InstanceType::Filler: return "filler";
  }
  return "prior";
}

inline std::optional<InstanceType> instance_type_from_string(std::string_view s) {
  if (s == "prior") return InstanceType::Prior;
  if (s == "action") return InstanceType::Action;
  if (s == "easy-goal") return InstanceType::EasyGoal;
  if (s == "competing-path") return InstanceType::CompetingPath;
  if (s == "filler") return InstanceType::Filler;
  return std::nullopt;
}

struct InstanceMeta {
  std::string id;
  InstanceType instance_type = InstanceType::Prior;
  std::optional<std::string> pair_id;
  std::vector<Action> forced_moves;
  std::size_t key_step_index = 0;

  friend bool operator==(const InstanceMeta&, const InstanceMeta&) = default;
};

struct WorldState {
  Cell player;
  Cell box;

  friend constexpr auto operator<=>(const WorldState&, const WorldState&) = default;
};

// One observed step: the action and the time spent choosing it, in seconds.
struct Observation {
  Action action = Action::U;
  double think_time = 0.0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

using ObservationSequence = std::vector<Observation>;

struct GridMap {
  int width = 0;
  int height = 0;
  std::vector<bool> walls;  // row-major, width * height
  Cell goal_a;
  Cell goal_b;
  Cell player_start;
  Cell box_start;
  InstanceMeta meta;

  bool in_bounds(Cell c) const {
    return c.row >= 0 && c.col >= 0 && c.row < height && c.col < width;
  }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(c.col);
  }
  Cell cell_at(std::size_t idx) const {
    return {static_cast<int>(idx / static_cast<std::size_t>(width)),
            static_cast<int>(idx % static_cast<std::size_t>(width))};
  }
  std::size_t cell_count() const { return walls.size(); }
  bool is_wall(Cell c) const { return !in_bounds(c) || walls[index(c)]; }
  Cell goal_cell(Goal g) const { return g == Goal::A ? goal_a : goal_b; }
  WorldState start() const { return {player_start, box_start}; }

  friend bool operator==(const GridMap&, const GridMap&) = default;
};

// Dense state code: player index * cells + box index.
inline std::uint32_t encode(const GridMap& map, const WorldState& s) {
  return static_cast<std::uint32_t>(map.index(s.player) * map.cell_count() + map.index(s.box));
}

inline WorldState decode(const GridMap& map, std::uint32_t code) {
  const std::size_t n = map.cell_count();
  return {map.cell_at(code / n), map.cell_at(code % n)};
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::string position(int row, int col) {
  return "(" + std::to_string(row) + "," + std::to_string(col) + ")";
}

inline void apply_header_pair(InstanceMeta& meta, std::optional<std::size_t>& key_step,
                              std::string_view key, std::string_view value) {
  if (key == "id") {
    meta.id = std::string(value);
  } else if (key == "type") {
    auto t = instance_type_from_string(value);
    if (!t) throw Error(ErrorKind::InvalidHeader, "unknown instance type '" + std::string(value) + "'");
    meta.instance_type = *t;
  } else if (key == "pair_id") {
    meta.pair_id = std::string(value);
  } else if (key == "forced_moves") {
    try {
      meta.forced_moves = actions_from_string(value);
    } catch (const Error& e) {
      throw Error(ErrorKind::InvalidHeader, e.what());
    }
  } else if (key == "key_step") {
    std::size_t v = 0;
    for (char c : value) {
      if (c < '0' || c > '9') {
        throw Error(ErrorKind::InvalidHeader, "key_step must be a non-negative integer");
      }
      v = v * 10 + static_cast<std::size_t>(c - '0');
    }
    if (value.empty()) throw Error(ErrorKind::InvalidHeader, "key_step is empty");
    key_step = v;
  } else {
    throw Error(ErrorKind::InvalidHeader, "unknown header key '" + std::string(key) + "'");
  }
}

}  // namespace detail

// Parses the text map format: optional ';key=value' header lines followed by
// the grid body ('#' wall, '.' floor, '@' player, '$' box, 'A'/'B' goals).
inline GridMap parse_map(std::string_view text) {
  GridMap map;
  std::optional<std::size_t> key_step;
  std::vector<std::string> rows;

  std::size_t pos = 0;
  bool in_body = false;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;

    if (!in_body && !line.empty() && line.front() == ';') {
      std::string_view rest = line.substr(1);
      while (!rest.empty()) {
        rest = detail::trim(rest);
        if (rest.empty()) break;
        std::size_t end = rest.find_first_of(" \t");
        std::string_view token = rest.substr(0, end);
        rest = end == std::string_view::npos ? std::string_view{} : rest.substr(end);
        std::size_t eq = token.find('=');
        if (eq == std::string_view::npos) {
          throw Error(ErrorKind::InvalidHeader, "expected key=value, got '" + std::string(token) + "'");
        }
        detail::apply_header_pair(map.meta, key_step, token.substr(0, eq), token.substr(eq + 1));
      }
      continue;
    }
    if (!in_body && detail::trim(line).empty()) continue;
    in_body = true;
    rows.emplace_back(line);
  }
  while (!rows.empty() && rows.back().empty()) rows.pop_back();

  std::optional<Cell> player, box, goal_a, goal_b;
  auto mark = [](std::optional<Cell>& slot, Cell c, const char* which) {
    if (slot) throw Error(ErrorKind::DuplicateMarker, which);
    slot = c;
  };

  for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
    const std::string& row = rows[static_cast<std::size_t>(r)];
    for (int c = 0; c < static_cast<int>(row.size()); ++c) {
      switch (row[static_cast<std::size_t>(c)]) {
        case '#': case '.': break;
        case '@': mark(player, {r, c}, "player"); break;
        case '$': mark(box, {r, c}, "box"); break;
        case 'A': mark(goal_a, {r, c}, "goal_a"); break;
        case 'B': mark(goal_b, {r, c}, "goal_b"); break;
        default:
          throw Error(ErrorKind::UnknownCharacter,
                      "'" + std::string(1, row[static_cast<std::size_t>(c)]) + "' at " +
                          detail::position(r, c));
      }
    }
  }
  if (rows.empty()) throw Error(ErrorKind::NonRectangularGrid, "empty grid");
  const std::size_t width = rows.front().size();
  for (const auto& row : rows) {
    if (row.size() != width) throw Error(ErrorKind::NonRectangularGrid, "rows differ in length");
  }
  if (!player) throw Error(ErrorKind::MissingMarker, "player");
  if (!box) throw Error(ErrorKind::MissingMarker, "box");
  if (!goal_a) throw Error(ErrorKind::MissingMarker, "goal_a");
  if (!goal_b) throw Error(ErrorKind::MissingMarker, "goal_b");

  map.height = static_cast<int>(rows.size());
  map.width = static_cast<int>(width);
  map.walls.assign(width * rows.size(), false);
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      const bool wall = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] == '#';
      const bool border = r == 0 || c == 0 || r == map.height - 1 || c == map.width - 1;
      if (border && !wall) throw Error(ErrorKind::UnsealedBorder, "open cell at " + detail::position(r, c));
      map.walls[map.index({r, c})] = wall;
    }
  }
  map.player_start = *player;
  map.box_start = *box;
  map.goal_a = *goal_a;
  map.goal_b = *goal_b;

  if (key_step && *key_step != map.meta.forced_moves.size()) {
    throw Error(ErrorKind::InvalidHeader, "key_step must equal the number of forced moves");
  }
  map.meta.key_step_index = map.meta.forced_moves.size();
  if (map.meta.instance_type == InstanceType::Prior && !map.meta.forced_moves.empty()) {
    throw Error(ErrorKind::InvalidHeader, "prior instances cannot carry forced moves");
  }
  return map;
}

inline std::string print_map(const GridMap& map) {
  std::ostringstream out;
  if (!map.meta.id.empty()) out << ";id=" << map.meta.id << '\n';
  out << ";type=" << to_string(map.meta.instance_type) << '\n';
  if (map.meta.pair_id) out << ";pair_id=" << *map.meta.pair_id << '\n';
  if (!map.meta.forced_moves.empty()) {
    out << ";forced_moves=" << actions_to_string(map.meta.forced_moves) << '\n';
  }
  out << ";key_step=" << map.meta.key_step_index << '\n';
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) {
      const Cell cell{r, c};
      char ch = map.is_wall(cell) ? '#' : '.';
      if (cell == map.player_start) ch = '@';
      else if (cell == map.box_start) ch = '$';
      else if (cell == map.goal_a) ch = 'A';
      else if (cell == map.goal_b) ch = 'B';
      out << ch;
    }
    out << '\n';
  }
  return out.str();
}

// Deterministic transition. Goal cells are plain floor for movement.
inline WorldState apply(const GridMap& map, const WorldState& state, Action action) {
  const Cell dest = step(state.player, action);
  if (map.is_wall(dest)) throw Error(ErrorKind::BlockedByWall, std::string(1, to_char(action)));
  if (dest == state.box) {
    const Cell box_dest = step(state.box, action);
    if (map.is_wall(box_dest)) throw Error(ErrorKind::BoxBlocked, std::string(1, to_char(action)));
    return {dest, box_dest};
  }
  return {dest, state.box};
}

// Non-throwing variant used on search hot paths.
inline std::optional<WorldState> try_apply(const GridMap& map, const WorldState& state, Action action) {
  const Cell dest = step(state.player, action);
  if (map.is_wall(dest)) return std::nullopt;
  if (dest == state.box) {
    const Cell box_dest = step(state.box, action);
    if (map.is_wall(box_dest)) return std::nullopt;
    return WorldState{dest, box_dest};
  }
  return WorldState{dest, state.box};
}

inline std::vector<Action> legal_actions(const GridMap& map, const WorldState& state) {
  std::vector<Action> out;
  for (Action a : kAllActions) {
    if (try_apply(map, state, a)) out.push_back(a);
  }
  return out;
}

inline bool is_goal(const GridMap& map, const WorldState& state, Goal hypothesis) {
  return state.box == map.goal_cell(hypothesis);
}

// Executes a whole action sequence; throws InfeasibleObservation on the first
// illegal action.
inline WorldState execute(const GridMap& map, WorldState state, const std::vector<Action>& actions,
                          ErrorKind failure = ErrorKind::InfeasibleObservation) {
  for (std::size_t i = 0; i < actions.size(); ++i) {
    auto next = try_apply(map, state, actions[i]);
    if (!next) {
      throw Error(failure, "action " + std::string(1, to_char(actions[i])) + " at step " +
                               std::to_string(i) + " is not executable");
    }
    state = *next;
  }
  return state;
}

}  // namespace goalrec

template <>
struct std::hash<goalrec::WorldState> {
  std::size_t operator()(const goalrec::WorldState& s) const noexcept {
    std::uint64_t h = static_cast<std::uint32_t>(s.player.row);
    h = h * 131 + static_cast<std::uint32_t>(s.player.col);
    h = h * 131 + static_cast<std::uint32_t>(s.box.row);
    h = h * 131 + static_cast<std::uint32_t>(s.box.col);
    return std::hash<std::uint64_t>{}(h);
  }
};
