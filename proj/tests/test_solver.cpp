#include <gtest/gtest.h>

#include "support.hpp"

using namespace goalrec;

namespace {

OptCost from_oracle(int c) { return c < 0 ? OptCost::unsolvable() : OptCost::finite(c); }

}  // namespace

TEST(OptCost, T1) {
  const GridMap m = parse_map(fixtures::kT1);
  EXPECT_EQ(opt_cost(m, Goal::A), OptCost::finite(4));
  EXPECT_EQ(opt_cost(m, Goal::B), OptCost::finite(4));
  EXPECT_EQ(oracle::opt_cost(fixtures::kT1, 0), 4);
}

TEST(OptCost, CornerIsUnsolvable) {
  const GridMap m = parse_map(fixtures::kCorner);
  EXPECT_FALSE(opt_cost(m, Goal::A).solvable());
  EXPECT_FALSE(opt_cost(m, Goal::B).solvable());
  EXPECT_FALSE(optimal_plan(m, Goal::A));
  EXPECT_EQ(OptCost::unsolvable().to_string(), "Unsolvable");
  EXPECT_EQ(OptCost::finite(4).to_string(), "Finite 4");
}

TEST(OptCost, Ordering) {
  EXPECT_LT(OptCost::finite(100), OptCost::unsolvable());
  EXPECT_LT(OptCost::finite(3), OptCost::finite(4));
  EXPECT_EQ(OptCost::unsolvable(), OptCost::unsolvable());
}

TEST(OptimalPlan, T1WitnessEndsOnGoal) {
  const GridMap m = parse_map(fixtures::kT1);
  const auto plan = optimal_plan(m, Goal::A);
  ASSERT_TRUE(plan);
  EXPECT_EQ(plan->actions.size(), 4u);
  EXPECT_EQ(execute(m, m.start(), plan->actions).box, (Cell{1, 1}));
}

TEST(OptimalPlan, WitnessesAcrossCorpus) {
  for (const auto& [id, m] : fixtures::corpus_maps()) {
    for (Goal g : kBothGoals) {
      const OptCost c = opt_cost(m, g);
      const auto plan = optimal_plan(m, g);
      ASSERT_EQ(c.solvable(), plan.has_value()) << id;
      if (!plan) continue;
      EXPECT_EQ(static_cast<int>(plan->actions.size()), c.value()) << id;
      EXPECT_TRUE(is_goal(m, execute(m, m.start(), plan->actions), g)) << id;
    }
  }
}

TEST(OptCost, MatchesOracleOnCorpus) {
  for (const auto& [id, text] : fixtures::corpus_map_texts()) {
    const GridMap m = parse_map(text);
    for (Goal g : kBothGoals) {
      EXPECT_EQ(opt_cost(m, g), from_oracle(oracle::opt_cost(text, static_cast<int>(g)))) << id << ' ' << to_char(g);
    }
  }
}

TEST(ReachableStates, CountsMatchOracle) {
  const GridMap t1 = parse_map(fixtures::kT1);
  EXPECT_GT(reachable_state_count(t1), 0u);
  EXPECT_LE(reachable_state_count(t1), 9u * 8u);
  // Box frozen in the corner: one state per player-reachable cell.
  const GridMap corner = parse_map(fixtures::kCorner);
  EXPECT_EQ(reachable_state_count(corner), 8u);
  for (const auto& [id, text] : fixtures::corpus_map_texts()) {
    EXPECT_EQ(reachable_state_count(parse_map(text)), oracle::reachable(text)) << id;
  }
}

TEST(ConstrainedCosts, T1Examples) {
  const GridMap m = parse_map(fixtures::kT1);
  const auto up = constrained_costs(m, Goal::A, {Action::U});
  EXPECT_EQ(up.cost_comply, OptCost::finite(4));
  const auto none = constrained_costs(m, Goal::A, {});
  EXPECT_EQ(none.cost_comply, OptCost::finite(4));
  EXPECT_FALSE(none.cost_defy.solvable());
}

TEST(ConstrainedCosts, CornerBothUnsolvable) {
  const GridMap m = parse_map(fixtures::kCorner);
  for (const auto& obs : {std::vector<Action>{}, std::vector<Action>{Action::U}, std::vector<Action>{Action::L}}) {
    const auto c = constrained_costs(m, Goal::A, obs);
    EXPECT_FALSE(c.cost_comply.solvable());
    EXPECT_FALSE(c.cost_defy.solvable());
  }
}

TEST(ConstrainedCosts, InfeasibleObservation) {
  const GridMap m = parse_map(fixtures::kT1);
  try {
    constrained_costs(m, Goal::A, {Action::D});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InfeasibleObservation);
  }
}

// Every prefix of length <= 3 on t1 against sequence enumeration.
TEST(ConstrainedCosts, MatchesEnumerationOracle) {
  const GridMap m = parse_map(fixtures::kT1);
  constexpr int kMaxLen = 10;
  std::vector<std::vector<Action>> prefixes{{}};
  for (std::size_t i = 0; i < prefixes.size(); ++i) {
    if (prefixes[i].size() >= 3) continue;
    const WorldState s = execute(m, m.start(), prefixes[i]);
    for (Action a : legal_actions(m, s)) {
      auto p = prefixes[i];
      p.push_back(a);
      prefixes.push_back(p);
    }
  }
  for (const auto& p : prefixes) {
    for (Goal g : kBothGoals) {
      const auto got = constrained_costs(m, g, p);
      const auto want = oracle::constrained(fixtures::kT1, static_cast<int>(g), actions_to_string(p), kMaxLen);
      // A missing oracle value means nothing within the bound: the library
      // must call it impossible or longer than the bound.
      auto check = [&](const OptCost& lib, int want_cost) {
        if (want_cost >= 0) {
          EXPECT_EQ(lib, from_oracle(want_cost)) << actions_to_string(p);
        } else {
          EXPECT_TRUE(!lib.solvable() || lib.value() > kMaxLen) << actions_to_string(p);
        }
      };
      check(got.cost_comply, want.comply);
      check(got.cost_defy, want.defy);
      const OptCost opt = opt_cost(m, g);
      EXPECT_GE(got.cost_comply, opt);
      EXPECT_GE(got.cost_defy, opt);
    }
  }
}

TEST(ConstrainedCosts, MonotoneOnCorpusKeySteps) {
  for (const auto& [id, m] : fixtures::corpus_maps()) {
    std::vector<Action> obs = m.meta.forced_moves;
    for (Action a : legal_actions(m, execute(m, m.start(), obs))) {
      auto with_key = obs;
      with_key.push_back(a);
      for (Goal g : kBothGoals) {
        const auto c = constrained_costs(m, g, with_key);
        const OptCost opt = opt_cost(m, g);
        EXPECT_GE(c.cost_comply, opt) << id;
        EXPECT_GE(c.cost_defy, opt) << id;
        EXPECT_TRUE(c.cost_comply == opt || c.cost_defy == opt || !opt.solvable()) << id;
      }
    }
  }
}
