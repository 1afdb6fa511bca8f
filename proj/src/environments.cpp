#include "gridlab/environments.hpp"

#include <algorithm>
#include <string>

#include "gridlab/errors.hpp"

namespace gridlab {

namespace {

ObservationSpec make_obs_spec(const Vocabulary& vocab, std::size_t radius, Encoding encoding) {
  ObservationSpec spec;
  spec.radius = radius;
  spec.encoding = encoding;
  spec.vocab = vocab;
  spec.self_code = vocab.code_of("agent");
  spec.other_agent_code = vocab.code_of("other_agent");
  spec.wall_code = vocab.code_of("wall");
  validate(spec);
  return spec;
}

Agent place_agent(GridWorld& world, std::int32_t id, Coord at, const ObservationSpec& obs, const ActionSpec& actions) {
  world.add(at, Layer::Actor, Entity{world.vocab().code_of("agent"), id});
  Agent a;
  a.id = id;
  a.pos = at;
  a.obs_spec = obs;
  a.action_spec = actions;
  return a;
}

EntityKind kind(Code code, std::string name, char glyph, Layer layer, bool passable = true) {
  EntityKind k;
  k.code = code;
  k.name = std::move(name);
  k.glyph = glyph;
  k.layer = layer;
  k.passable = passable;
  return k;
}

}  // namespace

// ---------------------------------------------------------------------------
// Treasure Hunt

void validate(const TreasureHuntConfig& c) {
  if (c.size < 3) throw ConfigError("treasure_hunt size must be >= 3, got " + std::to_string(c.size));
  if (c.n_agents < 1) throw ConfigError("treasure_hunt n_agents must be >= 1");
  const std::size_t interior = (c.size - 2) * (c.size - 2);
  if (interior <= c.n_agents) {
    throw ConfigError("treasure_hunt interior of " + std::to_string(interior) + " cells cannot hold " +
                      std::to_string(c.n_agents) + " agents");
  }
  if (!(c.gem_prob >= 0.0 && c.gem_prob <= 1.0)) throw ConfigError("treasure_hunt gem_prob must lie in [0, 1]");
}

Vocabulary treasure_hunt_vocabulary(double gem_reward) {
  EntityKind gem = kind(2, "gem", '*', Layer::Ground);
  gem.contact_reward = gem_reward;
  gem.consumed_on_contact = true;
  return Vocabulary(
      {
          kind(0, "ground_empty", '.', Layer::Ground),
          kind(1, "wall", '#', Layer::Ground, false),
          gem,
          kind(3, "actor_empty", ' ', Layer::Actor),
          kind(4, "agent", 'A', Layer::Actor),
          kind(5, "other_agent", 'a', Layer::Actor),
      },
      0, 3);
}

Environment build_treasure_hunt(const TreasureHuntConfig& config, std::uint64_t seed) {
  validate(config);
  const Vocabulary vocab = treasure_hunt_vocabulary(config.gem_reward);
  const Code wall = vocab.code_of("wall");
  Environment env{"treasure_hunt", GridWorld(config.size, config.size, vocab.ground_empty(), vocab, seed), {}, {}, {}};
  GridWorld& world = env.world;
  for (std::size_t r = 0; r < config.size; ++r) {
    for (std::size_t c = 0; c < config.size; ++c) {
      if (r == 0 || c == 0 || r + 1 == config.size || c + 1 == config.size) world.add({r, c}, Layer::Ground, Entity{wall});
    }
  }

  const ObservationSpec obs = make_obs_spec(vocab, config.obs_radius, config.encoding);
  const ActionSpec actions({ActionKind::Up, ActionKind::Down, ActionKind::Left, ActionKind::Right, ActionKind::Noop});
  auto free = world.cells_with(Layer::Ground, vocab.ground_empty());
  for (std::size_t i = 0; i < config.n_agents; ++i) {
    const std::size_t pick = world.rng().uniform_index(free.size());
    const Coord at = free[pick];
    free.erase(free.begin() + static_cast<std::ptrdiff_t>(pick));
    env.agents.push_back(place_agent(world, static_cast<std::int32_t>(i), at, obs, actions));
  }

  SpawnRule gems;
  gems.kind = vocab.code_of("gem");
  gems.probability_per_turn = config.gem_prob;
  gems.max_per_turn = 1;
  gems.region = Rect{1, config.size - 1, 1, config.size - 1};
  validate(gems, world);
  env.dynamics.rules.emplace_back(gems);
  env.rules.bump_penalty = config.bump_penalty;
  return env;
}

// ---------------------------------------------------------------------------
// Cleanup

std::string_view default_cleanup_map() {
  return "################\n"
         "#~~~.......,,,,#\n"
         "#~~~.P...P.,,,,#\n"
         "#~~~.......,,,,#\n"
         "#~~~.......,,,,#\n"
         "#~~~.P...P.,,,,#\n"
         "#~~~.......,,,,#\n"
         "#~~~.......,,,,#\n"
         "#~~~.P...P.,,,,#\n"
         "#~~~.......,,,,#\n"
         "################\n";
}

void validate(const CleanupConfig& c) {
  if (c.n_agents < 1) throw ConfigError("cleanup n_agents must be >= 1");
  if (!(c.dirt_prob >= 0.0 && c.dirt_prob <= 1.0)) throw ConfigError("cleanup dirt_prob must lie in [0, 1]");
  if (!(c.p_max >= 0.0 && c.p_max <= 1.0)) throw ConfigError("cleanup p_max must lie in [0, 1]");
  if (!(c.pollution_threshold > 0.0 && c.pollution_threshold <= 1.0)) {
    throw ConfigError("cleanup pollution_threshold must lie in (0, 1]");
  }
}

Vocabulary cleanup_vocabulary(double apple_reward) {
  EntityKind apple = kind(5, "apple", '@', Layer::Ground);
  apple.contact_reward = apple_reward;
  apple.consumed_on_contact = true;
  apple.residue = 4;
  return Vocabulary(
      {
          kind(0, "ground_empty", '.', Layer::Ground),
          kind(1, "wall", '#', Layer::Ground, false),
          kind(2, "river", '~', Layer::Ground),
          kind(3, "dirt", '%', Layer::Ground),
          kind(4, "orchard", ',', Layer::Ground),
          apple,
          kind(6, "actor_empty", ' ', Layer::Actor),
          kind(7, "agent", 'A', Layer::Actor),
          kind(8, "other_agent", 'a', Layer::Actor),
      },
      0, 6);
}

CleanupLayout parse_cleanup_map(std::string_view text, const Vocabulary& vocab) {
  CleanupLayout layout;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (line.empty()) {
      if (start >= text.size()) break;
      throw ParseError("empty row in cleanup layout", line_no);
    }
    if (layout.width == 0) {
      layout.width = line.size();
    } else if (line.size() != layout.width) {
      throw ParseError("row has " + std::to_string(line.size()) + " cells, expected " + std::to_string(layout.width),
                       line_no);
    }
    for (std::size_t c = 0; c < line.size(); ++c) {
      Code code;
      switch (line[c]) {
        case '#':
          code = vocab.code_of("wall");
          break;
        case '~':
          code = vocab.code_of("river");
          break;
        case ',':
          code = vocab.code_of("orchard");
          break;
        case 'P':
          code = vocab.ground_empty();
          layout.spawns.push_back({line_no - 1, c});
          break;
        case '.':
          code = vocab.ground_empty();
          break;
        default:
          throw ParseError("unknown layout glyph '" + std::string(1, line[c]) + "'", line_no, c + 1);
      }
      layout.ground.push_back(code);
    }
    ++layout.height;
  }
  if (layout.height == 0) throw ParseError("cleanup layout is empty", 1);
  return layout;
}

double apple_spawn_probability(double pollution_fraction, const CleanupConfig& config) {
  return config.p_max * std::max(0.0, 1.0 - pollution_fraction / config.pollution_threshold);
}

std::vector<WorldChange> cleanup_entity_step(GridWorld& world, const CleanupConfig& config, CleanupState& state) {
  const auto& vocab = world.vocab();
  SpawnRule dirt;
  dirt.kind = vocab.code_of("dirt");
  dirt.probability_per_turn = config.dirt_prob;
  dirt.max_per_turn = 1;
  dirt.on = vocab.code_of("river");
  auto changes = apply_spawn_rule(world, dirt);
  state.dirt_count += changes.size();

  const double p = apple_spawn_probability(state.pollution_fraction(), config);
  const Entity apple{vocab.code_of("apple")};
  for (const Coord at : world.cells_with(Layer::Ground, vocab.code_of("orchard"))) {
    if (world.rng().bernoulli(p)) changes.push_back({at, Layer::Ground, world.add(at, Layer::Ground, apple), apple});
  }
  return changes;
}

std::size_t fire_clean_beam(GridWorld& world, const Agent& agent, const CleanupConfig& config,
                            std::vector<WorldChange>* changes) {
  const auto& vocab = world.vocab();
  const Code dirt = vocab.code_of("dirt");
  long dr = 0;
  long dc = 0;
  switch (agent.facing) {
    case Facing::North:
      dr = -1;
      break;
    case Facing::South:
      dr = 1;
      break;
    case Facing::East:
      dc = 1;
      break;
    case Facing::West:
      dc = -1;
      break;
  }
  for (std::size_t d = 1; d <= config.beam_range; ++d) {
    const long r = static_cast<long>(agent.pos.row) + dr * static_cast<long>(d);
    const long c = static_cast<long>(agent.pos.col) + dc * static_cast<long>(d);
    if (r < 0 || c < 0) return 0;
    const Coord at{static_cast<std::size_t>(r), static_cast<std::size_t>(c)};
    if (!world.in_bounds(at)) return 0;
    const Entity ground = world.observe(at, Layer::Ground);
    if (!vocab[ground.code].passable) return 0;
    if (ground.code == dirt) {
      const Entity river{vocab.code_of("river")};
      world.add(at, Layer::Ground, river);
      if (changes) changes->push_back({at, Layer::Ground, ground, river});
      return 1;
    }
  }
  return 0;
}

CleanupEnvironment build_cleanup(const CleanupConfig& config, std::uint64_t seed) {
  validate(config);
  const Vocabulary vocab = cleanup_vocabulary(config.apple_reward);
  const CleanupLayout layout = parse_cleanup_map(config.map, vocab);

  CleanupEnvironment out{
      Environment{"cleanup", GridWorld(layout.height, layout.width, vocab.ground_empty(), vocab, seed), {}, {}, {}},
      std::make_shared<CleanupState>()};
  GridWorld& world = out.env.world;
  for (std::size_t r = 0; r < layout.height; ++r) {
    for (std::size_t c = 0; c < layout.width; ++c) world.add({r, c}, Layer::Ground, Entity{layout.ground[r * layout.width + c]});
  }
  out.state->river_cells = world.cells_with(Layer::Ground, vocab.code_of("river"));
  if (out.state->river_cells.empty()) throw ConfigError("cleanup layout has no river cells");
  if (world.cells_with(Layer::Ground, vocab.code_of("orchard")).empty()) {
    throw ConfigError("cleanup layout has no orchard cells");
  }
  if (layout.spawns.size() < config.n_agents) {
    throw ConfigError("cleanup layout has " + std::to_string(layout.spawns.size()) + " spawn cells for " +
                      std::to_string(config.n_agents) + " agents");
  }

  const ObservationSpec obs = make_obs_spec(vocab, config.obs_radius, config.encoding);
  const ActionSpec actions({ActionKind::Up, ActionKind::Down, ActionKind::Left, ActionKind::Right, ActionKind::Clean,
                            ActionKind::Noop});
  auto spawns = layout.spawns;
  for (std::size_t i = 0; i < config.n_agents; ++i) {
    const std::size_t pick = world.rng().uniform_index(spawns.size());
    const Coord at = spawns[pick];
    spawns.erase(spawns.begin() + static_cast<std::ptrdiff_t>(pick));
    out.env.agents.push_back(place_agent(world, static_cast<std::int32_t>(i), at, obs, actions));
  }

  auto state = out.state;
  out.env.dynamics.rules.emplace_back(DynamicsCallback{
      "cleanup", [config, state](GridWorld& w) { return cleanup_entity_step(w, config, *state); }});
  out.env.rules.clean = [config, state](GridWorld& w, const Agent& a, std::vector<WorldChange>* changes) {
    const std::size_t cleaned = fire_clean_beam(w, a, config, changes);
    state->dirt_count -= cleaned;
    return cleaned;
  };
  return out;
}

std::size_t count_dirt(const GridWorld& world, const CleanupState& state) {
  const Code dirt = world.vocab().code_of("dirt");
  return static_cast<std::size_t>(std::count_if(state.river_cells.begin(), state.river_cells.end(), [&](Coord at) {
    return world.observe(at, Layer::Ground).code == dirt;
  }));
}

std::string render_ground(const GridWorld& world) {
  std::string out;
  for (std::size_t r = 0; r < world.height(); ++r) {
    for (std::size_t c = 0; c < world.width(); ++c) out += world.vocab()[world.observe({r, c}, Layer::Ground).code].glyph;
    out += '\n';
  }
  return out;
}

}  // namespace gridlab
