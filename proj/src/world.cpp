#include "gridlab/world.hpp"

#include <string>

#include "gridlab/errors.hpp"

namespace gridlab {

std::string_view layer_name(Layer layer) { return layer == Layer::Ground ? "ground" : "actor"; }

std::string_view to_string(MoveResult r) {
  switch (r) {
    case MoveResult::Moved:
      return "Moved";
    case MoveResult::BlockedByWall:
      return "BlockedByWall";
    case MoveResult::BlockedByActor:
      return "BlockedByActor";
    case MoveResult::OutOfBounds:
      return "OutOfBounds";
  }
  return "?";
}

Vocabulary::Vocabulary(std::vector<EntityKind> kinds, Code ground_empty, Code actor_empty)
    : kinds_(std::move(kinds)), ground_empty_(ground_empty), actor_empty_(actor_empty) {
  for (std::size_t i = 0; i < kinds_.size(); ++i) {
    if (kinds_[i].code != i) {
      throw ConfigError("vocabulary codes must be contiguous from 0; kind '" + kinds_[i].name + "' has code " +
                        std::to_string(kinds_[i].code) + " at position " + std::to_string(i));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (kinds_[j].name == kinds_[i].name) throw ConfigError("duplicate kind name '" + kinds_[i].name + "'");
    }
  }
  if (!contains(ground_empty) || kinds_[ground_empty].layer != Layer::Ground) {
    throw ConfigError("vocabulary lacks a ground-empty kind");
  }
  if (!contains(actor_empty) || kinds_[actor_empty].layer != Layer::Actor) {
    throw ConfigError("vocabulary lacks an actor-empty kind");
  }
  for (const auto& k : kinds_) {
    if (k.residue && (!contains(*k.residue) || kinds_[*k.residue].layer != k.layer)) {
      throw ConfigError("kind '" + k.name + "' has a residue from another layer or outside the vocabulary");
    }
  }
}

const EntityKind& Vocabulary::operator[](Code code) const {
  if (!contains(code)) throw EncodingError("unknown entity code " + std::to_string(code));
  return kinds_[code];
}

std::optional<Code> Vocabulary::find(std::string_view name) const {
  for (const auto& k : kinds_) {
    if (k.name == name) return k.code;
  }
  return std::nullopt;
}

Code Vocabulary::code_of(std::string_view name) const {
  if (auto c = find(name)) return *c;
  throw ConfigError("vocabulary has no kind named '" + std::string(name) + "'");
}

std::optional<Code> Vocabulary::find_glyph(char glyph) const {
  for (const auto& k : kinds_) {
    if (k.glyph == glyph) return k.code;
  }
  return std::nullopt;
}

GridWorld::GridWorld(std::size_t height, std::size_t width, Code ground_fill, Vocabulary vocab, std::uint64_t seed)
    : height_(height), width_(width), vocab_(std::move(vocab)), rng_(seed) {
  if (height == 0) throw ConfigError("height must be >= 1, got 0");
  if (width == 0) throw ConfigError("width must be >= 1, got 0");
  if (!vocab_.contains(ground_fill) || vocab_[ground_fill].layer != Layer::Ground) {
    throw ConfigError("ground_fill code " + std::to_string(ground_fill) + " is not a ground kind");
  }
  layer_cells(Layer::Ground).assign(cell_count(), Entity{ground_fill});
  layer_cells(Layer::Actor).assign(cell_count(), Entity{vocab_.actor_empty()});
}

void GridWorld::check(Coord at) const {
  if (!in_bounds(at)) {
    throw BoundsError("coordinate (" + std::to_string(at.row) + ", " + std::to_string(at.col) +
                      ") outside " + std::to_string(height_) + "x" + std::to_string(width_) + " world");
  }
}

Entity GridWorld::add(Coord at, Layer layer, Entity entity) {
  check(at);
  if (!vocab_.contains(entity.code) || vocab_[entity.code].layer != layer) {
    throw ContractError("code " + std::to_string(entity.code) + " is not a " + std::string(layer_name(layer)) + " kind");
  }
  Entity& slot = layer_cells(layer)[index(at)];
  Entity previous = slot;
  slot = entity;
  return previous;
}

Entity GridWorld::remove(Coord at, Layer layer) { return add(at, layer, Entity{vocab_.empty_of(layer)}); }

const Entity& GridWorld::observe(Coord at, Layer layer) const {
  check(at);
  return layer_cells(layer)[index(at)];
}

MoveResult GridWorld::move_actor(Coord from, Coord to) {
  check(from);
  auto& actors = layer_cells(Layer::Actor);
  if (actors[index(from)].code == vocab_.actor_empty()) {
    throw ContractError("move_actor: no actor at (" + std::to_string(from.row) + ", " + std::to_string(from.col) +
                        ")");
  }
  if (!in_bounds(to)) return MoveResult::OutOfBounds;
  if (!vocab_[layer_cells(Layer::Ground)[index(to)].code].passable) return MoveResult::BlockedByWall;
  if (actors[index(to)].code != vocab_.actor_empty()) return MoveResult::BlockedByActor;
  actors[index(to)] = actors[index(from)];
  actors[index(from)] = Entity{vocab_.actor_empty()};
  return MoveResult::Moved;
}

std::optional<Coord> GridWorld::random_empty(Layer layer) {
  const auto empties = cells_with(layer, vocab_.empty_of(layer));
  const std::size_t pick = rng_.uniform_index(empties.size());
  if (empties.empty()) return std::nullopt;
  return empties[pick];
}

std::vector<Coord> GridWorld::cells_with(Layer layer, Code code, const std::optional<Rect>& region) const {
  std::vector<Coord> out;
  const auto& cells = layer_cells(layer);
  for (std::size_t r = 0; r < height_; ++r) {
    for (std::size_t c = 0; c < width_; ++c) {
      const Coord at{r, c};
      if (cells[index(at)].code == code && (!region || region->contains(at))) out.push_back(at);
    }
  }
  return out;
}

std::uint64_t GridWorld::hash() const {
  // FNV-1a over (layer, code, agent id) words.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xFF;
      h *= 0x100000001B3ULL;
    }
  };
  mix(height_);
  mix(width_);
  mix(turn_);
  for (const auto& layer : cells_) {
    for (const auto& e : layer) {
      mix(e.code);
      mix(static_cast<std::uint64_t>(static_cast<std::int64_t>(e.agent_id)));
    }
  }
  return h;
}

std::vector<Code> GridWorld::ground_codes() const {
  std::vector<Code> out;
  out.reserve(cell_count());
  for (const auto& e : layer_cells(Layer::Ground)) out.push_back(e.code);
  return out;
}

}  // namespace gridlab
