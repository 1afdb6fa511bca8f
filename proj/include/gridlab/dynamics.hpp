#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gridlab/world.hpp"

namespace gridlab {

/// One slot rewrite. Applying `after` to the slot reproduces the change.
struct WorldChange {
  Coord at;
  Layer layer = Layer::Ground;
  Entity before;
  Entity after;

  friend bool operator==(const WorldChange&, const WorldChange&) = default;
};

/// Writes each change's `after` into its slot, in order.
void apply_changes(GridWorld& world, const std::vector<WorldChange>& changes);

/// Probabilistic placement of `kind` onto eligible slots. A slot is eligible
/// when it holds `on` (default: the layer's empty kind) and lies in `region`
/// (default: the whole grid).
struct SpawnRule {
  Code kind = 0;
  double probability_per_turn = 0.0;
  Layer layer = Layer::Ground;
  std::size_t max_per_turn = 1;
  std::optional<Rect> region;
  std::optional<Code> on;
};

/// Throws ConfigError when the probability is outside [0, 1], the kind is
/// not on `layer`, or the region leaves the grid.
void validate(const SpawnRule& rule, const GridWorld& world);

/// Applies one rule. RNG use, in order: one bernoulli(p) draw; on success,
/// one uniform_index draw per placement, each over the eligible slots that
/// remain. No eligible slot means no placement draws.
std::vector<WorldChange> apply_spawn_rule(GridWorld& world, const SpawnRule& rule);

/// Environment-specific dynamics that do not fit the declarative form.
struct DynamicsCallback {
  std::string name;
  std::function<std::vector<WorldChange>(GridWorld&)> step;
};

using DynamicsRule = std::variant<SpawnRule, DynamicsCallback>;

/// Rules applied once per turn, in list order.
struct DynamicsSet {
  std::vector<DynamicsRule> rules;
};

std::vector<WorldChange> step_entities(GridWorld& world, const DynamicsSet& dynamics);

}  // namespace gridlab
