#pragma once

// Replay files are UTF-8 JSON lines. Line 1 is the header:
//
//   {"v":1,"env":"cleanup","config":{...},"vocab":[{"code":0,"name":"ground_empty",
//    "glyph":".","layer":"ground"},...],"h":11,"w":16,"n":2}
//
// and every following line is one frame, recorded after that turn's entity
// dynamics:
//
//   {"e":0,"t":3,"g":[1,1,...],"a":[[0,4,6,"N"],...],"act":[[0,"up"],...],
//    "r":[[0,0.0],...],"s":[[0,1.0],...]}
//
// g holds row-major ground codes; a is (agent_id, row, col, facing); act,
// r and s are keyed by agent id and sorted by it.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gridlab/agent.hpp"
#include "gridlab/environments.hpp"
#include "gridlab/world.hpp"

namespace gridlab {

inline constexpr int kReplayVersion = 1;

struct VocabEntry {
  Code code = 0;
  std::string name;
  char glyph = '?';
  Layer layer = Layer::Ground;

  friend bool operator==(const VocabEntry&, const VocabEntry&) = default;
};

struct ReplayHeader {
  int format_version = kReplayVersion;
  std::string env;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::vector<VocabEntry> vocab;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t n_agents = 0;

  friend bool operator==(const ReplayHeader&, const ReplayHeader&) = default;
};

struct ActorPlacement {
  std::int32_t agent_id = 0;
  std::size_t row = 0;
  std::size_t col = 0;
  Facing facing = Facing::North;

  friend bool operator==(const ActorPlacement&, const ActorPlacement&) = default;
};

struct FrameRecord {
  std::size_t epoch = 0;
  std::size_t turn = 0;
  std::vector<Code> ground;
  std::vector<ActorPlacement> actors;
  std::vector<std::pair<std::int32_t, std::string>> actions;
  std::vector<std::pair<std::int32_t, double>> rewards;
  std::vector<std::pair<std::int32_t, double>> scores;

  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

struct Replay {
  ReplayHeader header;
  std::vector<FrameRecord> frames;

  friend bool operator==(const Replay&, const Replay&) = default;
};

std::vector<VocabEntry> vocab_entries(const Vocabulary& vocab);

ReplayHeader make_header(const Environment& env, nlohmann::ordered_json config);

/// Value snapshot of the world and the turn's transitions, sorted by agent
/// id. `transitions` pairs each acting agent's id with its transition.
FrameRecord record_frame(const Environment& env, std::size_t epoch, std::size_t turn,
                         const std::vector<std::pair<std::int32_t, Transition>>& transitions);

nlohmann::ordered_json header_to_json(const ReplayHeader& h);
nlohmann::ordered_json frame_to_json(const FrameRecord& f);
/// `line` is only used in error messages.
ReplayHeader header_from_json(const nlohmann::ordered_json& j, std::size_t line = 1);
FrameRecord frame_from_json(const nlohmann::ordered_json& j, std::size_t line);

/// Streams a replay to disk one line at a time.
class ReplayWriter {
 public:
  explicit ReplayWriter(const std::filesystem::path& path);

  void write_header(const ReplayHeader& header);
  void write_frame(const FrameRecord& frame);
  void flush();

 private:
  void write_line(const std::string& line);

  std::filesystem::path path_;
  std::ofstream out_;
};

void write_replay(const std::filesystem::path& path, const Replay& replay);
/// Throws ParseError (with the 1-based line) on malformed input and
/// VersionError when the header's version is not kReplayVersion.
Replay read_replay(const std::filesystem::path& path);
Replay parse_replay(std::istream& in);

/// height lines of width glyphs; actors are drawn with the glyph of the
/// actor kind named "agent". Throws EncodingError for codes the header does
/// not list.
std::vector<std::string> render_ascii(const ReplayHeader& header, const FrameRecord& frame);

/// Same picture drawn straight from a live world: GROUND glyphs from the
/// world vocabulary, occupied ACTOR slots as the "agent" glyph.
std::vector<std::string> render_world(const GridWorld& world);

}  // namespace gridlab
