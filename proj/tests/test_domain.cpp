#include <gtest/gtest.h>

#include <set>

#include "support.hpp"

using namespace goalrec;

namespace {

ErrorKind parse_error_kind(const std::string& text) {
  try {
    parse_map(text);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a parse error";
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(ParseMap, PlacesMarkers) {
  const GridMap m = parse_map(fixtures::kT1);
  EXPECT_EQ(m.width, 5);
  EXPECT_EQ(m.height, 5);
  EXPECT_EQ(m.player_start, (Cell{3, 2}));
  EXPECT_EQ(m.box_start, (Cell{2, 2}));
  EXPECT_EQ(m.goal_a, (Cell{1, 1}));
  EXPECT_EQ(m.goal_b, (Cell{1, 3}));
  EXPECT_TRUE(m.is_wall({0, 0}));
  EXPECT_FALSE(m.is_wall({1, 1}));
}

TEST(ParseMap, Errors) {
  EXPECT_EQ(parse_error_kind("#####\n#A.B#\n#.$.#\n#...#\n#####\n"), ErrorKind::MissingMarker);
  EXPECT_EQ(parse_error_kind("#####\n#A$B#\n#.$.#\n#.@.#\n#####\n"), ErrorKind::DuplicateMarker);
  EXPECT_EQ(parse_error_kind("#####\n#A.B#\n#.$.\n#.@.#\n#####\n"), ErrorKind::NonRectangularGrid);
  EXPECT_EQ(parse_error_kind("#####\n#A.B.\n#.$.#\n#.@.#\n#####\n"), ErrorKind::UnsealedBorder);
  EXPECT_EQ(parse_error_kind("#####\n#A.B#\n#.$x#\n#.@.#\n#####\n"), ErrorKind::UnknownCharacter);
  EXPECT_EQ(parse_error_kind(";type=bogus\n" + fixtures::kT1), ErrorKind::InvalidHeader);
}

TEST(ParseMap, MissingMarkerNamesWhich) {
  try {
    parse_map("#####\n#A.B#\n#.$.#\n#...#\n#####\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("player"), std::string::npos) << e.what();
  }
}

TEST(ParseMap, Headers) {
  const GridMap m = parse_map(";id=t1\n;type=action\n;pair_id=t0\n;forced_moves=U\n" + fixtures::kT1);
  EXPECT_EQ(m.meta.id, "t1");
  EXPECT_EQ(m.meta.instance_type, InstanceType::Action);
  EXPECT_EQ(m.meta.pair_id, "t0");
  EXPECT_EQ(m.meta.forced_moves, std::vector<Action>{Action::U});
  EXPECT_EQ(m.meta.key_step_index, 1u);
}

TEST(ParseMap, RoundTripsThroughPrint) {
  for (const auto& [id, text] : fixtures::corpus_map_texts()) {
    const GridMap m = parse_map(text);
    EXPECT_EQ(parse_map(print_map(m)), m) << id;
  }
  const GridMap t1 = parse_map(fixtures::kT1);
  EXPECT_EQ(parse_map(print_map(t1)), t1);
}

TEST(Apply, PushMovesBox) {
  const GridMap m = parse_map(fixtures::kT1);
  const WorldState s = apply(m, m.start(), Action::U);
  EXPECT_EQ(s.player, (Cell{2, 2}));
  EXPECT_EQ(s.box, (Cell{1, 2}));
}

TEST(Apply, Errors) {
  const GridMap m = parse_map(fixtures::kT1);
  try {
    apply(m, m.start(), Action::D);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BlockedByWall);
  }
  const WorldState pushed{{2, 2}, {1, 2}};
  try {
    apply(m, pushed, Action::U);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BoxBlocked);
  }
  EXPECT_FALSE(try_apply(m, pushed, Action::U));
}

TEST(Apply, GoalCellsAreFloor) {
  const GridMap m = parse_map(fixtures::kT1);
  const WorldState s{{2, 1}, {2, 2}};
  EXPECT_EQ(apply(m, s, Action::U).player, (Cell{1, 1}));
}

TEST(LegalActions, StartOfT1) {
  const GridMap m = parse_map(fixtures::kT1);
  EXPECT_EQ(legal_actions(m, m.start()), (std::vector<Action>{Action::U, Action::L, Action::R}));
}

TEST(LegalActions, Cornered) {
  // Player in a dead-end pocket with the box blocking the only exit.
  const GridMap m = parse_map("#####\n#A.B#\n##$##\n##@##\n#####\n");
  EXPECT_LE(legal_actions(m, m.start()).size(), 1u);
}

TEST(IsGoal, Cases) {
  const GridMap m = parse_map(fixtures::kT1);
  const WorldState on_a{{2, 1}, {1, 1}};
  EXPECT_TRUE(is_goal(m, on_a, Goal::A));
  EXPECT_FALSE(is_goal(m, on_a, Goal::B));
  EXPECT_FALSE(is_goal(m, m.start(), Goal::A));
  EXPECT_FALSE(is_goal(m, m.start(), Goal::B));
}

// Exhaustive over reachable states of every corpus map up to 8x8 plus t1:
// legal_actions matches the oracle's move rule, apply is deterministic and
// conserves the map.
TEST(Invariants, ReachableStatesOfSmallMaps) {
  std::map<std::string, std::string> texts = fixtures::corpus_map_texts();
  texts["t1"] = fixtures::kT1;
  texts["corner"] = fixtures::kCorner;
  std::size_t checked = 0;
  for (const auto& [id, text] : texts) {
    const GridMap m = parse_map(text);
    if (m.width > 8 || m.height > 8) continue;
    const oracle::RawGrid raw(text);
    std::set<std::uint32_t> seen{encode(m, m.start())};
    std::vector<WorldState> stack{m.start()};
    while (!stack.empty()) {
      const WorldState s = stack.back();
      stack.pop_back();
      std::vector<Action> expected;
      for (int a = 0; a < 4; ++a) {
        oracle::RawState r{s.player.row, s.player.col, s.box.row, s.box.col};
        if (oracle::move(raw, r, a)) expected.push_back(static_cast<Action>(a));
      }
      ASSERT_EQ(legal_actions(m, s), expected) << id;
      for (Action a : expected) {
        const WorldState t = apply(m, s, a);
        ASSERT_EQ(t, apply(m, s, a));
        ASSERT_NE(t.player, t.box);
        ASSERT_FALSE(m.is_wall(t.player));
        ASSERT_FALSE(m.is_wall(t.box));
        if (seen.insert(encode(m, t)).second) stack.push_back(t);
      }
      ++checked;
    }
  }
  EXPECT_GT(checked, 0u);
}

TEST(Encode, RoundTrip) {
  const GridMap m = parse_map(fixtures::kT1);
  const WorldState s{{3, 1}, {2, 3}};
  EXPECT_EQ(decode(m, encode(m, s)), s);
}

TEST(Execute, InfeasibleObservation) {
  const GridMap m = parse_map(fixtures::kT1);
  try {
    execute(m, m.start(), actions_from_string("UU"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InfeasibleObservation);
  }
}
