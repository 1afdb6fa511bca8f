#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "gridlab/agent.hpp"
#include "gridlab/dynamics.hpp"
#include "gridlab/world.hpp"

namespace gridlab {

/// A populated world plus everything needed to step it.
struct Environment {
  std::string name;
  GridWorld world;
  std::vector<Agent> agents;
  DynamicsSet dynamics;
  ActionRules rules;
};

// ---------------------------------------------------------------------------
// Treasure Hunt: gems appear at random on empty floor; walking onto one
// collects it.

struct TreasureHuntConfig {
  /// Side of the square world including its wall border.
  std::size_t size = 5;
  std::size_t n_agents = 1;
  double gem_prob = 0.2;
  double gem_reward = 10.0;
  double bump_penalty = -0.1;
  std::size_t obs_radius = 2;
  Encoding encoding = Encoding::MultiHot;

  friend bool operator==(const TreasureHuntConfig&, const TreasureHuntConfig&) = default;
};

void validate(const TreasureHuntConfig& config);

/// Codes: 0 ground_empty '.', 1 wall '#', 2 gem '*', 3 actor_empty ' ',
/// 4 agent 'A', 5 other_agent 'a'.
Vocabulary treasure_hunt_vocabulary(double gem_reward);

/// Walled size x size world, agents on distinct random interior cells, one
/// gem spawn rule over the interior. Actions: up, down, left, right, noop.
Environment build_treasure_hunt(const TreasureHuntConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Cleanup: apples grow in the orchard at a rate that falls as the river
// fills with dirt; agents can fire a cleaning beam at the river.

/// 11 x 16 layout: river band on the left, orchard band on the right.
std::string_view default_cleanup_map();

struct CleanupConfig {
  std::string map = std::string(default_cleanup_map());
  std::size_t n_agents = 1;
  double dirt_prob = 0.5;
  double p_max = 0.05;
  double pollution_threshold = 0.5;
  std::size_t beam_range = 3;
  double apple_reward = 1.0;
  std::size_t obs_radius = 2;
  Encoding encoding = Encoding::MultiHot;

  friend bool operator==(const CleanupConfig&, const CleanupConfig&) = default;
};

void validate(const CleanupConfig& config);

/// Tracked pollution. dirt_count is kept in step with the grid by the
/// dynamics and the cleaning beam.
struct CleanupState {
  std::vector<Coord> river_cells;
  std::size_t dirt_count = 0;

  double pollution_fraction() const {
    return river_cells.empty() ? 0.0 : static_cast<double>(dirt_count) / static_cast<double>(river_cells.size());
  }
};

/// Codes: 0 ground_empty '.', 1 wall '#', 2 river '~', 3 dirt '%',
/// 4 orchard ',', 5 apple '@', 6 actor_empty ' ', 7 agent 'A',
/// 8 other_agent 'a'.
Vocabulary cleanup_vocabulary(double apple_reward);

/// Parsed layout. Glyphs: '#' wall, '~' river, ',' orchard, 'P' spawn
/// (empty ground), '.' empty ground. Throws ParseError naming the 1-based
/// line and column of a bad glyph.
struct CleanupLayout {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<Code> ground;
  std::vector<Coord> spawns;
};

CleanupLayout parse_cleanup_map(std::string_view text, const Vocabulary& vocab);

/// p_max * max(0, 1 - pollution / threshold).
double apple_spawn_probability(double pollution_fraction, const CleanupConfig& config);

/// (1) dirt appears on one clean river cell with probability dirt_prob;
/// (2) with pollution recomputed, every orchard cell without an apple grows
/// one independently. Draws: one bernoulli plus at most one uniform_index
/// for dirt, then one bernoulli per eligible orchard cell in row-major
/// order.
std::vector<WorldChange> cleanup_entity_step(GridWorld& world, const CleanupConfig& config, CleanupState& state);

/// Scans up to beam_range cells ahead of the agent, stopping at a wall or
/// the grid edge. The first dirt cell found turns back into river. Returns
/// the number of cells cleaned (0 or 1).
std::size_t fire_clean_beam(GridWorld& world, const Agent& agent, const CleanupConfig& config,
                            std::vector<WorldChange>* changes = nullptr);

struct CleanupEnvironment {
  Environment env;
  std::shared_ptr<CleanupState> state;
};

/// Actions: up, down, left, right, clean, noop. Agents start on randomly
/// chosen distinct spawn cells.
CleanupEnvironment build_cleanup(const CleanupConfig& config, std::uint64_t seed);

/// Dirt cells on the river, counted from the grid.
std::size_t count_dirt(const GridWorld& world, const CleanupState& state);

/// GROUND layer as layout text, one line per row.
std::string render_ground(const GridWorld& world);

}  // namespace gridlab
