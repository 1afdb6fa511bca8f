#include "gridlab/dynamics.hpp"

#include "gridlab/errors.hpp"

namespace gridlab {

void apply_changes(GridWorld& world, const std::vector<WorldChange>& changes) {
  for (const auto& c : changes) world.add(c.at, c.layer, c.after);
}

void validate(const SpawnRule& rule, const GridWorld& world) {
  if (!(rule.probability_per_turn >= 0.0 && rule.probability_per_turn <= 1.0)) {
    throw ConfigError("spawn probability must lie in [0, 1], got " + std::to_string(rule.probability_per_turn));
  }
  const auto& vocab = world.vocab();
  if (!vocab.contains(rule.kind) || vocab[rule.kind].layer != rule.layer) {
    throw ConfigError("spawn kind " + std::to_string(rule.kind) + " is not a " + std::string(layer_name(rule.layer)) +
                      " kind");
  }
  if (rule.on && (!vocab.contains(*rule.on) || vocab[*rule.on].layer != rule.layer)) {
    throw ConfigError("spawn target kind is not on the rule's layer");
  }
  if (rule.region) {
    const Rect& r = *rule.region;
    if (r.row_begin >= r.row_end || r.col_begin >= r.col_end || r.row_end > world.height() ||
        r.col_end > world.width()) {
      throw ConfigError("spawn region is empty or leaves the grid");
    }
  }
}

std::vector<WorldChange> apply_spawn_rule(GridWorld& world, const SpawnRule& rule) {
  std::vector<WorldChange> changes;
  if (!world.rng().bernoulli(rule.probability_per_turn)) return changes;

  const Code target = rule.on.value_or(world.vocab().empty_of(rule.layer));
  auto eligible = world.cells_with(rule.layer, target, rule.region);
  for (std::size_t placed = 0; placed < rule.max_per_turn && !eligible.empty(); ++placed) {
    const std::size_t pick = world.rng().uniform_index(eligible.size());
    const Coord at = eligible[pick];
    eligible.erase(eligible.begin() + static_cast<std::ptrdiff_t>(pick));
    const Entity spawned{rule.kind};
    const Entity before = world.add(at, rule.layer, spawned);
    changes.push_back({at, rule.layer, before, spawned});
  }
  return changes;
}

std::vector<WorldChange> step_entities(GridWorld& world, const DynamicsSet& dynamics) {
  std::vector<WorldChange> all;
  for (const auto& rule : dynamics.rules) {
    std::vector<WorldChange> changes;
    if (const auto* spawn = std::get_if<SpawnRule>(&rule)) {
      changes = apply_spawn_rule(world, *spawn);
    } else {
      changes = std::get<DynamicsCallback>(rule).step(world);
    }
    all.insert(all.end(), changes.begin(), changes.end());
  }
  return all;
}

}  // namespace gridlab
