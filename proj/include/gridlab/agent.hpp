#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gridlab/dynamics.hpp"
#include "gridlab/world.hpp"

namespace gridlab {

class Model;

enum class Facing : std::uint8_t { North, South, East, West };

std::string_view to_string(Facing f);
/// Accepts "N", "S", "E", "W".
std::optional<Facing> parse_facing(std::string_view text);

enum class ActionKind : std::uint8_t { Up, Down, Left, Right, Clean, Noop };

std::string_view to_string(ActionKind a);
std::optional<ActionKind> parse_action(std::string_view name);

/// Ordered, duplicate-free list of actions; models emit indices into it.
class ActionSpec {
 public:
  ActionSpec() = default;
  explicit ActionSpec(std::vector<ActionKind> actions);

  std::size_t count() const { return actions_.size(); }
  ActionKind kind(std::size_t index) const;
  std::string_view name(std::size_t index) const { return to_string(kind(index)); }
  std::optional<std::size_t> index_of(ActionKind a) const;
  bool contains(ActionKind a) const { return index_of(a).has_value(); }
  const std::vector<ActionKind>& actions() const { return actions_; }

  friend bool operator==(const ActionSpec&, const ActionSpec&) = default;

 private:
  std::vector<ActionKind> actions_;
};

enum class Encoding : std::uint8_t { MultiHot, Ascii };

struct ObservationSpec {
  /// nullopt observes the full grid; a value is the egocentric radius.
  std::optional<std::size_t> radius;
  Encoding encoding = Encoding::MultiHot;
  Vocabulary vocab;
  Code self_code = 0;
  Code other_agent_code = 0;
  /// Code reported for cells outside the grid.
  Code wall_code = 0;

  std::size_t channels() const { return vocab.size(); }
};

/// Rejects self_code == other_agent_code and codes outside the vocabulary.
void validate(const ObservationSpec& spec);

/// Binary (rows, cols, channels) tensor, row-major with channels innermost.
struct MultiHot {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> bits;

  std::uint8_t at(std::size_t r, std::size_t c, std::size_t k) const { return bits[(r * cols + c) * channels + k]; }
  std::uint8_t& at(std::size_t r, std::size_t c, std::size_t k) { return bits[(r * cols + c) * channels + k]; }

  friend bool operator==(const MultiHot&, const MultiHot&) = default;
};

struct AsciiView {
  std::vector<std::string> lines;

  friend bool operator==(const AsciiView&, const AsciiView&) = default;
};

struct Observation {
  std::variant<MultiHot, AsciiView> view;
  /// Optional agent-internal features. Not populated by the shipped
  /// environments.
  std::vector<double> aux;

  /// Canonical byte form: a tag byte, the shape, the payload (multi-hot bits
  /// packed 8 per byte, or the lines) and the aux values.
  std::vector<std::uint8_t> canonical_bytes() const;
  /// Flattened real features for function approximators. Throws
  /// ContractError for ASCII observations.
  std::vector<double> features() const;

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Cell grid of (ground code, optional actor code) pairs, the common input
/// of both encoders.
struct CodeWindow {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Code> ground;
  std::vector<std::optional<Code>> actor;
};

/// One line per row. An actor shadows the ground under it. Throws
/// EncodingError for a code the vocabulary does not know.
std::vector<std::string> encode_ascii(const CodeWindow& window, const ObservationSpec& spec);

struct Agent {
  std::int32_t id = 0;
  Coord pos;
  Facing facing = Facing::North;
  ObservationSpec obs_spec;
  ActionSpec action_spec;
  Model* model = nullptr;
  double score = 0.0;
  bool done = false;
};

/// Window around the agent (or the full grid), with the observer written as
/// self_code, other agents as other_agent_code and off-grid cells as
/// wall_code.
CodeWindow observation_window(const GridWorld& world, const Agent& agent);

Observation observe_agent(const GridWorld& world, const Agent& agent);

/// How an environment resolves actions beyond plain movement.
struct ActionRules {
  double bump_penalty = 0.0;
  /// Handler for ActionKind::Clean; returns how many cells it changed.
  std::function<std::size_t(GridWorld&, const Agent&, std::vector<WorldChange>*)> clean;
};

/// Executes one action and returns its reward, which is also added to
/// agent.score. Consumed entities are appended to `changes` when given.
double apply_action(GridWorld& world, Agent& agent, std::size_t action, const ActionRules& rules,
                    std::vector<WorldChange>* changes = nullptr);

struct Transition {
  Observation state;
  std::size_t action = 0;
  double reward = 0.0;
  Observation next_state;
  bool done = false;
};

/// observe -> take_action -> apply_action -> observe, then hands the
/// transition to the model. Errors from the model carry the agent id.
Transition agent_turn(GridWorld& world, Agent& agent, bool is_last_turn, const ActionRules& rules,
                      std::vector<WorldChange>* changes = nullptr);

}  // namespace gridlab
