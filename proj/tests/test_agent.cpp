#include <gtest/gtest.h>

#include "gridlab/agent.hpp"
#include "gridlab/environments.hpp"
#include "gridlab/errors.hpp"
#include "gridlab/learning.hpp"
#include "oracles.hpp"

using namespace gridlab;

namespace {

// Codes: 0 ground_empty, 1 wall, 2 gem, 3 actor_empty, 4 agent, 5 other_agent.
constexpr Code kEmpty = 0, kWall = 1, kGem = 2, kAgent = 4, kOther = 5;

const Vocabulary& vocab() {
  static const Vocabulary v = treasure_hunt_vocabulary(10.0);
  return v;
}

Agent make_agent(GridWorld& w, std::int32_t id, Coord at, std::optional<std::size_t> radius,
                 Encoding enc = Encoding::MultiHot) {
  Agent a;
  a.id = id;
  a.pos = at;
  a.obs_spec = ObservationSpec{radius, enc, vocab(), kAgent, kOther, kWall};
  a.action_spec = ActionSpec({ActionKind::Up, ActionKind::Down, ActionKind::Left, ActionKind::Right, ActionKind::Noop});
  w.add(at, Layer::Actor, Entity{kAgent, id});
  return a;
}

constexpr std::size_t kUp = 0, kRight = 3, kNoop = 4;

}  // namespace

TEST(ActionSpec, NamesAndErrors) {
  const ActionSpec spec({ActionKind::Up, ActionKind::Clean, ActionKind::Noop});
  EXPECT_EQ(spec.count(), 3u);
  EXPECT_EQ(spec.name(1), "clean");
  EXPECT_EQ(spec.index_of(ActionKind::Noop), 2u);
  EXPECT_FALSE(spec.index_of(ActionKind::Left).has_value());
  EXPECT_THROW(spec.kind(3), ContractError);
  EXPECT_THROW(ActionSpec({ActionKind::Up, ActionKind::Up}), ConfigError);
  EXPECT_THROW(ActionSpec(std::vector<ActionKind>{}), ConfigError);
  EXPECT_EQ(parse_action("right"), ActionKind::Right);
  EXPECT_FALSE(parse_action("jump").has_value());
  EXPECT_EQ(parse_facing("W"), Facing::West);
  EXPECT_EQ(to_string(Facing::South), "S");
}

TEST(ObservationSpec, Validation) {
  EXPECT_THROW(validate(ObservationSpec{1, Encoding::MultiHot, vocab(), kAgent, kAgent, kWall}), ConfigError);
  EXPECT_THROW(validate(ObservationSpec{1, Encoding::MultiHot, vocab(), kAgent, 40, kWall}), ConfigError);
  EXPECT_NO_THROW(validate(ObservationSpec{1, Encoding::MultiHot, vocab(), kAgent, kOther, kWall}));
}

TEST(Observe, GemNorthRadiusOne) {
  GridWorld w(5, 5, kEmpty, vocab());
  w.add({1, 2}, Layer::Ground, Entity{kGem});
  Agent a = make_agent(w, 0, {2, 2}, 1);
  const auto obs = observe_agent(w, a);
  const auto& mh = std::get<MultiHot>(obs.view);
  EXPECT_EQ(mh.rows, 3u);
  EXPECT_EQ(mh.channels, vocab().size());
  EXPECT_EQ(mh.at(0, 1, kGem), 1);
  EXPECT_EQ(mh.at(1, 1, kAgent), 1);
  EXPECT_EQ(mh.at(1, 1, kEmpty), 1);
}

TEST(Observe, ShapeForRadiusTwo) {
  GridWorld w(7, 7, kEmpty, vocab());
  Agent a = make_agent(w, 0, {3, 3}, 2);
  const Observation obs = observe_agent(w, a);
  const auto& mh = std::get<MultiHot>(obs.view);
  EXPECT_EQ(mh.rows, 5u);
  EXPECT_EQ(mh.cols, 5u);
  EXPECT_EQ(mh.bits.size(), 5u * 5u * vocab().size());
}

TEST(Observe, CornerPaddingIsWall) {
  GridWorld w(4, 4, kEmpty, vocab());
  Agent a = make_agent(w, 0, {0, 0}, 1);
  const Observation obs = observe_agent(w, a);
  const auto& mh = std::get<MultiHot>(obs.view);
  int walls = 0;
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 3; ++c) walls += mh.at(r, c, kWall);
  }
  EXPECT_EQ(walls, 5);
}

TEST(Observe, OtherAgentsUseOtherCode) {
  GridWorld w(3, 3, kEmpty, vocab());
  Agent a = make_agent(w, 0, {1, 1}, std::nullopt);
  make_agent(w, 1, {0, 0}, std::nullopt);
  const Observation obs = observe_agent(w, a);
  const auto& mh = std::get<MultiHot>(obs.view);
  EXPECT_EQ(mh.at(0, 0, kOther), 1);
  EXPECT_EQ(mh.at(0, 0, kAgent), 0);
  EXPECT_EQ(mh.at(1, 1, kAgent), 1);
}

TEST(Observe, AsciiFullView) {
  GridWorld w(3, 3, kEmpty, vocab());
  Agent a = make_agent(w, 0, {1, 1}, std::nullopt, Encoding::Ascii);
  const auto& ascii = std::get<AsciiView>(observe_agent(w, a).view);
  EXPECT_EQ(ascii.lines, (std::vector<std::string>{"...", ".A.", "..."}));

  GridWorld walled(3, 3, kWall, vocab());
  Agent b = make_agent(walled, 0, {1, 1}, std::nullopt, Encoding::Ascii);
  EXPECT_EQ(std::get<AsciiView>(observe_agent(walled, b).view).lines.front(), "###");

  CodeWindow bad{1, 1, {99}, {std::nullopt}};
  EXPECT_THROW(encode_ascii(bad, a.obs_spec), EncodingError);
  EXPECT_THROW(observe_agent(w, a).features(), ContractError);
}

TEST(Observe, PropertySuiteSmall) {
  const auto res = oracle::run_observation_suite(2000, 23);
  EXPECT_EQ(res.shape_violations, 0u);
  EXPECT_EQ(res.cell_violations, 0u);
  EXPECT_EQ(res.center_violations, 0u);
  EXPECT_EQ(res.padding_violations, 0u);
}

TEST(Observe, PurityAcrossAgents) {
  Environment env = build_treasure_hunt(TreasureHuntConfig{7, 4}, 9);
  const auto h = env.world.hash();
  for (int round = 0; round < 3; ++round) {
    for (auto it = env.agents.rbegin(); it != env.agents.rend(); ++it) observe_agent(env.world, *it);
  }
  EXPECT_EQ(env.world.hash(), h);
}

TEST(Observation, CanonicalBytesSeparateDistinctViews) {
  GridWorld w(3, 3, kEmpty, vocab());
  Agent a = make_agent(w, 0, {1, 1}, 1);
  const auto before = observe_agent(w, a);
  w.add({0, 0}, Layer::Ground, Entity{kGem});
  const auto after = observe_agent(w, a);
  EXPECT_NE(before.canonical_bytes(), after.canonical_bytes());
  EXPECT_EQ(before.canonical_bytes(), before.canonical_bytes());
  EXPECT_EQ(before.features().size(), 9u * vocab().size());
}

TEST(ApplyAction, GemPickup) {
  GridWorld w(3, 3, kEmpty, vocab());
  w.add({1, 2}, Layer::Ground, Entity{kGem});
  Agent a = make_agent(w, 0, {1, 1}, 1);
  std::vector<WorldChange> changes;
  EXPECT_EQ(apply_action(w, a, kRight, ActionRules{-0.1, {}}, &changes), 10.0);
  EXPECT_EQ(a.pos, (Coord{1, 2}));
  EXPECT_EQ(w.observe({1, 2}, Layer::Ground).code, kEmpty);
  EXPECT_EQ(w.observe({1, 2}, Layer::Actor).agent_id, 0);
  ASSERT_EQ(changes.size(), 1u);
  EXPECT_EQ(changes[0].before.code, kGem);
  EXPECT_EQ(a.score, 10.0);
}

TEST(ApplyAction, BumpAndNoop) {
  GridWorld w(3, 3, kEmpty, vocab());
  w.add({0, 1}, Layer::Ground, Entity{kWall});
  Agent a = make_agent(w, 0, {1, 1}, 1);
  a.facing = Facing::South;
  EXPECT_EQ(apply_action(w, a, kUp, ActionRules{-0.1, {}}), -0.1);
  EXPECT_EQ(a.pos, (Coord{1, 1}));
  EXPECT_EQ(a.facing, Facing::North);

  Agent edge = make_agent(w, 1, {0, 0}, 1);
  EXPECT_EQ(apply_action(w, edge, kUp, ActionRules{-0.1, {}}), -0.1);

  const auto h = w.hash();
  EXPECT_EQ(apply_action(w, a, kNoop, ActionRules{-0.1, {}}), 0.0);
  EXPECT_EQ(w.hash(), h);

  EXPECT_THROW(apply_action(w, a, 5, ActionRules{}), ContractError);
  a.done = true;
  EXPECT_THROW(apply_action(w, a, kNoop, ActionRules{}), ContractError);
}

TEST(AgentTurn, NoopScriptedAndLastTurn) {
  GridWorld w(3, 3, kEmpty, vocab());
  Agent a = make_agent(w, 7, {1, 1}, 1);
  ScriptedModel m({}, 5, kNoop);
  a.model = &m;
  const Transition t = agent_turn(w, a, false, ActionRules{});
  EXPECT_EQ(t.action, kNoop);
  EXPECT_EQ(t.reward, 0.0);
  EXPECT_EQ(t.state, t.next_state);
  EXPECT_FALSE(t.done);
  EXPECT_TRUE(agent_turn(w, a, true, ActionRules{}).done);
}

TEST(AgentTurn, OutOfRangeActionNamesAgent) {
  GridWorld w(3, 3, kEmpty, vocab());
  Agent a = make_agent(w, 7, {1, 1}, 1);
  ScriptedModel m({5}, 5, kNoop);
  a.model = &m;
  try {
    agent_turn(w, a, false, ActionRules{});
    FAIL() << "expected ContractError";
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("agent 7"), std::string::npos);
  }
}
