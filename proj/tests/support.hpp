#pragma once

// Shared fixtures and independent oracles. The oracles work on the raw map
// text with their own move rules so they share no code with the library.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "goalrec/goalrec.hpp"

namespace fixtures {

inline const std::string kT1 = "#####\n#A.B#\n#.$.#\n#.@.#\n#####\n";
inline const std::string kCorner = "#####\n#$.B#\n#.A.#\n#..@#\n#####\n";

inline std::filesystem::path corpus_dir() { return GOALREC_CORPUS_DIR; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Every .map file under the corpus, by file stem.
inline std::map<std::string, std::string> corpus_map_texts() {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(corpus_dir() / "maps")) {
    if (e.path().extension() == ".map") out[e.path().stem().string()] = slurp(e.path());
  }
  return out;
}

inline std::map<std::string, goalrec::GridMap> corpus_maps() {
  std::map<std::string, goalrec::GridMap> out;
  for (const auto& [id, text] : corpus_map_texts()) out.emplace(id, goalrec::parse_map(text));
  return out;
}

}  // namespace fixtures

namespace oracle {

// Grid body only: header lines dropped.
struct RawGrid {
  std::vector<std::string> rows;
  int pr = -1, pc = -1, br = -1, bc = -1;
  int goal[2][2]{{-1, -1}, {-1, -1}};

  explicit RawGrid(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == ';') continue;
      rows.push_back(line);
    }
    for (int r = 0; r < height(); ++r) {
      for (int c = 0; c < width(); ++c) {
        switch (rows[r][c]) {
          case '@': pr = r, pc = c; break;
          case '$': br = r, bc = c; break;
          case 'A': goal[0][0] = r, goal[0][1] = c; break;
          case 'B': goal[1][0] = r, goal[1][1] = c; break;
        }
      }
    }
  }
  int height() const { return static_cast<int>(rows.size()); }
  int width() const { return static_cast<int>(rows[0].size()); }
  bool wall(int r, int c) const { return r < 0 || c < 0 || r >= height() || c >= width() || rows[r][c] == '#'; }
  int cells() const { return width() * height(); }
};

inline constexpr int kDr[4] = {-1, 1, 0, 0};
inline constexpr int kDc[4] = {0, 0, -1, 1};

struct RawState {
  int pr, pc, br, bc;
  bool operator==(const RawState&) const = default;
};

// Returns false when the move is illegal.
inline bool move(const RawGrid& g, RawState& s, int a) {
  const int nr = s.pr + kDr[a], nc = s.pc + kDc[a];
  if (g.wall(nr, nc)) return false;
  if (nr == s.br && nc == s.bc) {
    const int br = s.br + kDr[a], bc = s.bc + kDc[a];
    if (g.wall(br, bc)) return false;
    s.br = br, s.bc = bc;
  }
  s.pr = nr, s.pc = nc;
  return true;
}

inline bool at_goal(const RawGrid& g, const RawState& s, int goal) {
  return s.br == g.goal[goal][0] && s.bc == g.goal[goal][1];
}

// Cost-to-goal for every (player, box) pair by repeated Bellman relaxation
// until nothing changes; then read off the start state. -1 = unsolvable.
inline int opt_cost(const std::string& text, int goal) {
  const RawGrid g(text);
  const int w = g.width(), n = g.cells();
  constexpr int kInf = std::numeric_limits<int>::max() / 2;
  std::vector<int> cost(static_cast<std::size_t>(n) * n, kInf);
  auto id = [&](const RawState& s) { return static_cast<std::size_t>((s.pr * w + s.pc) * n + s.br * w + s.bc); };
  std::vector<RawState> states;
  for (int p = 0; p < n; ++p) {
    for (int b = 0; b < n; ++b) {
      if (p == b) continue;
      RawState s{p / w, p % w, b / w, b % w};
      if (g.wall(s.pr, s.pc) || g.wall(s.br, s.bc)) continue;
      states.push_back(s);
      if (at_goal(g, s, goal)) cost[id(s)] = 0;
    }
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& s : states) {
      int best = cost[id(s)];
      for (int a = 0; a < 4; ++a) {
        RawState t = s;
        if (!move(g, t, a)) continue;
        if (cost[id(t)] < kInf) best = std::min(best, cost[id(t)] + 1);
      }
      if (best < cost[id(s)]) {
        cost[id(s)] = best;
        changed = true;
      }
    }
  }
  const int c = cost[id({g.pr, g.pc, g.br, g.bc})];
  return c >= kInf ? -1 : c;
}

// Number of states reachable from the start, by plain DFS.
inline std::size_t reachable(const std::string& text) {
  const RawGrid g(text);
  const int w = g.width(), n = g.cells();
  std::vector<bool> seen(static_cast<std::size_t>(n) * n, false);
  std::vector<RawState> stack{{g.pr, g.pc, g.br, g.bc}};
  auto id = [&](const RawState& s) { return static_cast<std::size_t>((s.pr * w + s.pc) * n + s.br * w + s.bc); };
  seen[id(stack[0])] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    RawState s = stack.back();
    stack.pop_back();
    for (int a = 0; a < 4; ++a) {
      RawState t = s;
      if (!move(g, t, a) || seen[id(t)]) continue;
      seen[id(t)] = true;
      ++count;
      stack.push_back(t);
    }
  }
  return count;
}

// Constrained costs by enumerating every legal action sequence up to
// `max_len`. A plan is a sequence whose final state has the box on the goal.
// -1 means no plan of length <= max_len.
struct Costs {
  int comply = -1;
  int defy = -1;
};

inline Costs constrained(const std::string& text, int goal, const std::string& obs, int max_len) {
  const RawGrid g(text);
  Costs out;
  std::string seq;
  auto keep = [](int& slot, int v) { slot = slot < 0 ? v : std::min(slot, v); };
  auto visit = [&](auto&& self, RawState s) -> void {
    if (at_goal(g, s, goal)) {
      const bool complies = seq.size() >= obs.size() && seq.compare(0, obs.size(), obs) == 0;
      keep(complies ? out.comply : out.defy, static_cast<int>(seq.size()));
    }
    if (static_cast<int>(seq.size()) >= max_len) return;
    for (int a = 0; a < 4; ++a) {
      RawState t = s;
      if (!move(g, t, a)) continue;
      seq.push_back("UDLR"[a]);
      self(self, t);
      seq.pop_back();
    }
  };
  visit(visit, RawState{g.pr, g.pc, g.br, g.bc});
  return out;
}

}  // namespace oracle
