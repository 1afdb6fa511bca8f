#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridlab/rng.hpp"

namespace gridlab {

/// Grid position. Row 0 is the top row.
struct Coord {
  std::size_t row = 0;
  std::size_t col = 0;

  friend bool operator==(const Coord&, const Coord&) = default;
  friend auto operator<=>(const Coord&, const Coord&) = default;
};

/// Half-open rectangle [row_begin, row_end) x [col_begin, col_end).
struct Rect {
  std::size_t row_begin = 0;
  std::size_t row_end = 0;
  std::size_t col_begin = 0;
  std::size_t col_end = 0;

  bool contains(Coord c) const {
    return c.row >= row_begin && c.row < row_end && c.col >= col_begin && c.col < col_end;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

enum class Layer : std::uint8_t { Ground = 0, Actor = 1 };
inline constexpr std::size_t kLayerCount = 2;

std::string_view layer_name(Layer layer);

using Code = std::uint16_t;

struct EntityKind {
  Code code = 0;
  std::string name;
  char glyph = '?';
  Layer layer = Layer::Ground;
  bool passable = true;
  double contact_reward = 0.0;
  bool consumed_on_contact = false;
  /// Kind left behind when this entity is consumed. Absent means the
  /// layer's empty kind.
  std::optional<Code> residue;
};

/// An ordered list of entity kinds whose codes are 0..size-1. Holds exactly
/// one empty kind per layer.
class Vocabulary {
 public:
  Vocabulary() = default;
  /// Validates contiguity and the presence of both empty kinds.
  Vocabulary(std::vector<EntityKind> kinds, Code ground_empty, Code actor_empty);

  std::size_t size() const { return kinds_.size(); }
  const EntityKind& operator[](Code code) const;
  const EntityKind& at(Code code) const { return (*this)[code]; }
  bool contains(Code code) const { return code < kinds_.size(); }

  /// Throws ConfigError when no kind has this name.
  Code code_of(std::string_view name) const;
  std::optional<Code> find(std::string_view name) const;
  std::optional<Code> find_glyph(char glyph) const;

  Code empty_of(Layer layer) const { return layer == Layer::Ground ? ground_empty_ : actor_empty_; }
  Code ground_empty() const { return ground_empty_; }
  Code actor_empty() const { return actor_empty_; }

  const std::vector<EntityKind>& kinds() const { return kinds_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.ground_empty_ == b.ground_empty_ && a.actor_empty_ == b.actor_empty_ &&
           a.kinds_.size() == b.kinds_.size() && std::equal(a.kinds_.begin(), a.kinds_.end(), b.kinds_.begin(),
                                                            [](const EntityKind& x, const EntityKind& y) {
                                                              return x.code == y.code && x.name == y.name &&
                                                                     x.glyph == y.glyph && x.layer == y.layer;
                                                            });
  }

 private:
  std::vector<EntityKind> kinds_;
  Code ground_empty_ = 0;
  Code actor_empty_ = 0;
};

inline constexpr std::int32_t kNoAgent = -1;

/// One occupant of a grid slot. Actor-layer instances carry the id of the
/// agent they represent.
struct Entity {
  Code code = 0;
  std::int32_t agent_id = kNoAgent;

  friend bool operator==(const Entity&, const Entity&) = default;
};

enum class MoveResult : std::uint8_t { Moved, BlockedByWall, BlockedByActor, OutOfBounds };

std::string_view to_string(MoveResult r);

/// Two-layer bounded grid with a turn counter and the world's random stream.
/// Every (layer, row, col) slot always holds exactly one entity.
class GridWorld {
 public:
  /// Fills GROUND with `ground_fill` and ACTOR with the vocabulary's actor
  /// empty. Throws ConfigError on zero dimensions or a fill that is not a
  /// ground kind of `vocab`.
  GridWorld(std::size_t height, std::size_t width, Code ground_fill, Vocabulary vocab,
            std::uint64_t seed = 0);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t cell_count() const { return height_ * width_; }
  const Vocabulary& vocab() const { return vocab_; }

  std::uint64_t turn() const { return turn_; }
  void advance_turn() { ++turn_; }

  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

  bool in_bounds(Coord at) const { return at.row < height_ && at.col < width_; }

  /// Places `entity`, returning the previous occupant. Throws ContractError
  /// when the code is not a kind of `layer`.
  Entity add(Coord at, Layer layer, Entity entity);
  /// Resets the slot to the layer's empty kind, returning the occupant.
  Entity remove(Coord at, Layer layer);
  const Entity& observe(Coord at, Layer layer) const;

  /// Moves the actor at `from` to `to`. The world is left
  /// untouched unless the result is Moved. Throws ContractError when `from`
  /// holds no actor.
  MoveResult move_actor(Coord from, Coord to);

  /// Uniform draw over slots of `layer` holding the layer's empty kind.
  /// Always consumes exactly one uniform_index quantum, even when there is
  /// no candidate.
  std::optional<Coord> random_empty(Layer layer);

  /// Row-major coordinates whose `layer` slot holds `code`, optionally
  /// restricted to `region`.
  std::vector<Coord> cells_with(Layer layer, Code code, const std::optional<Rect>& region = std::nullopt) const;

  /// Order-sensitive digest of both layers and the turn counter. RNG state is
  /// excluded.
  std::uint64_t hash() const;

  /// Row-major GROUND codes.
  std::vector<Code> ground_codes() const;

  friend bool operator==(const GridWorld&, const GridWorld&) = default;

 private:
  std::size_t index(Coord at) const { return at.row * width_ + at.col; }
  void check(Coord at) const;
  std::vector<Entity>& layer_cells(Layer layer) { return cells_[static_cast<std::size_t>(layer)]; }
  const std::vector<Entity>& layer_cells(Layer layer) const { return cells_[static_cast<std::size_t>(layer)]; }

  std::size_t height_;
  std::size_t width_;
  Vocabulary vocab_;
  std::vector<Entity> cells_[kLayerCount];
  std::uint64_t turn_ = 0;
  Rng rng_;
};

}  // namespace gridlab
