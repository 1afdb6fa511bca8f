#include "gridlab/agent.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <string>

#include "gridlab/errors.hpp"
#include "gridlab/model.hpp"

namespace gridlab {

std::string_view to_string(Facing f) {
  switch (f) {
    case Facing::North:
      return "N";
    case Facing::South:
      return "S";
    case Facing::East:
      return "E";
    case Facing::West:
      return "W";
  }
  return "?";
}

std::optional<Facing> parse_facing(std::string_view text) {
  if (text == "N") return Facing::North;
  if (text == "S") return Facing::South;
  if (text == "E") return Facing::East;
  if (text == "W") return Facing::West;
  return std::nullopt;
}

namespace {

constexpr std::array<std::pair<ActionKind, std::string_view>, 6> kActionNames{{
    {ActionKind::Up, "up"},
    {ActionKind::Down, "down"},
    {ActionKind::Left, "left"},
    {ActionKind::Right, "right"},
    {ActionKind::Clean, "clean"},
    {ActionKind::Noop, "noop"},
}};

}  // namespace

std::string_view to_string(ActionKind a) {
  for (const auto& [kind, name] : kActionNames) {
    if (kind == a) return name;
  }
  return "?";
}

std::optional<ActionKind> parse_action(std::string_view name) {
  for (const auto& [kind, n] : kActionNames) {
    if (n == name) return kind;
  }
  return std::nullopt;
}

ActionSpec::ActionSpec(std::vector<ActionKind> actions) : actions_(std::move(actions)) {
  if (actions_.empty()) throw ConfigError("action spec must contain at least one action");
  for (std::size_t i = 0; i < actions_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (actions_[i] == actions_[j]) {
        throw ConfigError("duplicate action '" + std::string(to_string(actions_[i])) + "' in action spec");
      }
    }
  }
}

ActionKind ActionSpec::kind(std::size_t index) const {
  if (index >= actions_.size()) {
    throw ContractError("action index " + std::to_string(index) + " outside [0, " + std::to_string(actions_.size()) +
                        ")");
  }
  return actions_[index];
}

std::optional<std::size_t> ActionSpec::index_of(ActionKind a) const {
  const auto it = std::find(actions_.begin(), actions_.end(), a);
  if (it == actions_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - actions_.begin());
}

void validate(const ObservationSpec& spec) {
  const auto& v = spec.vocab;
  if (!v.contains(spec.self_code) || !v.contains(spec.other_agent_code) || !v.contains(spec.wall_code)) {
    throw ConfigError("observation spec refers to a code outside its vocabulary");
  }
  if (spec.self_code == spec.other_agent_code) throw ConfigError("self_code must differ from other_agent_code");
}

std::vector<std::uint8_t> Observation::canonical_bytes() const {
  std::vector<std::uint8_t> out;
  auto put64 = [&out](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  if (const auto* mh = std::get_if<MultiHot>(&view)) {
    out.push_back(0);
    put64(mh->rows);
    put64(mh->cols);
    put64(mh->channels);
    std::uint8_t acc = 0;
    for (std::size_t i = 0; i < mh->bits.size(); ++i) {
      if (mh->bits[i]) acc |= static_cast<std::uint8_t>(1u << (i % 8));
      if (i % 8 == 7) {
        out.push_back(acc);
        acc = 0;
      }
    }
    if (mh->bits.size() % 8 != 0) out.push_back(acc);
  } else {
    const auto& ascii = std::get<AsciiView>(view);
    out.push_back(1);
    put64(ascii.lines.size());
    for (const auto& line : ascii.lines) {
      put64(line.size());
      out.insert(out.end(), line.begin(), line.end());
    }
  }
  put64(aux.size());
  for (double d : aux) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    put64(bits);
  }
  return out;
}

std::vector<double> Observation::features() const {
  const auto* mh = std::get_if<MultiHot>(&view);
  if (!mh) throw ContractError("real-valued features require a multi-hot observation");
  std::vector<double> out(mh->bits.begin(), mh->bits.end());
  out.insert(out.end(), aux.begin(), aux.end());
  return out;
}

std::vector<std::string> encode_ascii(const CodeWindow& window, const ObservationSpec& spec) {
  std::vector<std::string> lines(window.rows, std::string(window.cols, ' '));
  for (std::size_t r = 0; r < window.rows; ++r) {
    for (std::size_t c = 0; c < window.cols; ++c) {
      const std::size_t i = r * window.cols + c;
      const Code code = window.actor[i] ? *window.actor[i] : window.ground[i];
      if (!spec.vocab.contains(code)) throw EncodingError("no glyph for entity code " + std::to_string(code));
      lines[r][c] = spec.vocab[code].glyph;
    }
  }
  return lines;
}

CodeWindow observation_window(const GridWorld& world, const Agent& agent) {
  const auto& spec = agent.obs_spec;
  CodeWindow w;
  long top = 0;
  long left = 0;
  if (spec.radius) {
    const long r = static_cast<long>(*spec.radius);
    w.rows = w.cols = 2 * *spec.radius + 1;
    top = static_cast<long>(agent.pos.row) - r;
    left = static_cast<long>(agent.pos.col) - r;
  } else {
    w.rows = world.height();
    w.cols = world.width();
  }
  w.ground.assign(w.rows * w.cols, spec.wall_code);
  w.actor.assign(w.rows * w.cols, std::nullopt);
  const Code actor_empty = world.vocab().actor_empty();
  for (std::size_t r = 0; r < w.rows; ++r) {
    const long wr = top + static_cast<long>(r);
    if (wr < 0 || wr >= static_cast<long>(world.height())) continue;
    for (std::size_t c = 0; c < w.cols; ++c) {
      const long wc = left + static_cast<long>(c);
      if (wc < 0 || wc >= static_cast<long>(world.width())) continue;
      const Coord at{static_cast<std::size_t>(wr), static_cast<std::size_t>(wc)};
      const std::size_t i = r * w.cols + c;
      w.ground[i] = world.observe(at, Layer::Ground).code;
      const Entity& actor = world.observe(at, Layer::Actor);
      if (actor.code != actor_empty) {
        w.actor[i] = actor.agent_id == agent.id ? spec.self_code : spec.other_agent_code;
      }
    }
  }
  return w;
}

Observation observe_agent(const GridWorld& world, const Agent& agent) {
  const CodeWindow w = observation_window(world, agent);
  if (agent.obs_spec.encoding == Encoding::Ascii) return Observation{AsciiView{encode_ascii(w, agent.obs_spec)}, {}};

  MultiHot mh;
  mh.rows = w.rows;
  mh.cols = w.cols;
  mh.channels = agent.obs_spec.channels();
  mh.bits.assign(mh.rows * mh.cols * mh.channels, 0);
  for (std::size_t r = 0; r < w.rows; ++r) {
    for (std::size_t c = 0; c < w.cols; ++c) {
      const std::size_t i = r * w.cols + c;
      mh.at(r, c, w.ground[i]) = 1;
      if (w.actor[i]) mh.at(r, c, *w.actor[i]) = 1;
    }
  }
  return Observation{std::move(mh), {}};
}

namespace {

std::optional<Coord> step_from(Coord pos, ActionKind a) {
  switch (a) {
    case ActionKind::Up:
      if (pos.row == 0) return std::nullopt;
      return Coord{pos.row - 1, pos.col};
    case ActionKind::Down:
      return Coord{pos.row + 1, pos.col};
    case ActionKind::Left:
      if (pos.col == 0) return std::nullopt;
      return Coord{pos.row, pos.col - 1};
    case ActionKind::Right:
      return Coord{pos.row, pos.col + 1};
    default:
      return pos;
  }
}

Facing facing_of(ActionKind a) {
  switch (a) {
    case ActionKind::Up:
      return Facing::North;
    case ActionKind::Down:
      return Facing::South;
    case ActionKind::Left:
      return Facing::West;
    default:
      return Facing::East;
  }
}

}  // namespace

double apply_action(GridWorld& world, Agent& agent, std::size_t action, const ActionRules& rules,
                    std::vector<WorldChange>* changes) {
  if (agent.done) throw ContractError("agent " + std::to_string(agent.id) + " acted after its episode ended");
  if (action >= agent.action_spec.count()) {
    throw ContractError("agent " + std::to_string(agent.id) + ": action index " + std::to_string(action) +
                        " outside [0, " + std::to_string(agent.action_spec.count()) + ")");
  }
  const ActionKind kind = agent.action_spec.kind(action);
  double reward = 0.0;
  switch (kind) {
    case ActionKind::Up:
    case ActionKind::Down:
    case ActionKind::Left:
    case ActionKind::Right: {
      agent.facing = facing_of(kind);
      const auto target = step_from(agent.pos, kind);
      const MoveResult moved = target ? world.move_actor(agent.pos, *target) : MoveResult::OutOfBounds;
      if (moved != MoveResult::Moved) {
        reward = rules.bump_penalty;
        break;
      }
      agent.pos = *target;
      const Entity ground = world.observe(agent.pos, Layer::Ground);
      const EntityKind& gk = world.vocab()[ground.code];
      if (gk.consumed_on_contact) {
        reward = gk.contact_reward;
        const Entity residue{gk.residue.value_or(world.vocab().ground_empty())};
        world.add(agent.pos, Layer::Ground, residue);
        if (changes) changes->push_back({agent.pos, Layer::Ground, ground, residue});
      }
      break;
    }
    case ActionKind::Clean:
      if (!rules.clean) {
        throw ContractError("agent " + std::to_string(agent.id) + " used clean in an environment without a beam");
      }
      rules.clean(world, agent, changes);
      break;
    case ActionKind::Noop:
      break;
  }
  agent.score += reward;
  return reward;
}

Transition agent_turn(GridWorld& world, Agent& agent, bool is_last_turn, const ActionRules& rules,
                      std::vector<WorldChange>* changes) {
  if (!agent.model) throw ContractError("agent " + std::to_string(agent.id) + " has no model");
  Transition t;
  t.state = observe_agent(world, agent);
  t.action = agent.model->take_action(t.state);
  if (t.action >= agent.action_spec.count()) {
    throw ContractError("model for agent " + std::to_string(agent.id) + " returned action index " +
                        std::to_string(t.action) + " outside [0, " + std::to_string(agent.action_spec.count()) + ")");
  }
  t.reward = apply_action(world, agent, t.action, rules, changes);
  t.next_state = observe_agent(world, agent);
  t.done = is_last_turn;
  agent.model->observe_transition(t);
  return t;
}

}  // namespace gridlab
