#include "gridlab/replay.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <optional>
#include <sstream>

#include "gridlab/errors.hpp"

namespace gridlab {

using ojson = nlohmann::ordered_json;

std::vector<VocabEntry> vocab_entries(const Vocabulary& vocab) {
  std::vector<VocabEntry> out;
  for (const auto& k : vocab.kinds()) out.push_back({k.code, k.name, k.glyph, k.layer});
  return out;
}

ReplayHeader make_header(const Environment& env, ojson config) {
  ReplayHeader h;
  h.env = env.name;
  h.config = std::move(config);
  h.vocab = vocab_entries(env.world.vocab());
  h.height = env.world.height();
  h.width = env.world.width();
  h.n_agents = env.agents.size();
  return h;
}

FrameRecord record_frame(const Environment& env, std::size_t epoch, std::size_t turn,
                         const std::vector<std::pair<std::int32_t, Transition>>& transitions) {
  FrameRecord f;
  f.epoch = epoch;
  f.turn = turn;
  f.ground = env.world.ground_codes();
  for (const auto& a : env.agents) {
    f.actors.push_back({a.id, a.pos.row, a.pos.col, a.facing});
    f.scores.emplace_back(a.id, a.score);
  }
  std::map<std::int32_t, const Transition*> by_id;
  for (const auto& [id, t] : transitions) by_id[id] = &t;
  for (const auto& [id, t] : by_id) {
    const auto agent = std::find_if(env.agents.begin(), env.agents.end(), [id = id](const Agent& a) { return a.id == id; });
    f.actions.emplace_back(id, std::string(agent->action_spec.name(t->action)));
    f.rewards.emplace_back(id, t->reward);
  }
  std::sort(f.actors.begin(), f.actors.end(),
            [](const ActorPlacement& a, const ActorPlacement& b) { return a.agent_id < b.agent_id; });
  std::sort(f.scores.begin(), f.scores.end());
  return f;
}

ojson header_to_json(const ReplayHeader& h) {
  ojson vocab = ojson::array();
  for (const auto& v : h.vocab) {
    vocab.push_back(ojson{{"code", v.code},
                          {"name", v.name},
                          {"glyph", std::string(1, v.glyph)},
                          {"layer", std::string(layer_name(v.layer))}});
  }
  return ojson{{"v", h.format_version}, {"env", h.env}, {"config", h.config}, {"vocab", std::move(vocab)},
               {"h", h.height},         {"w", h.width}, {"n", h.n_agents}};
}

ojson frame_to_json(const FrameRecord& f) {
  ojson actors = ojson::array();
  for (const auto& a : f.actors) actors.push_back(ojson::array({a.agent_id, a.row, a.col, std::string(to_string(a.facing))}));
  ojson actions = ojson::array();
  for (const auto& [id, name] : f.actions) actions.push_back(ojson::array({id, name}));
  ojson rewards = ojson::array();
  for (const auto& [id, r] : f.rewards) rewards.push_back(ojson::array({id, r}));
  ojson scores = ojson::array();
  for (const auto& [id, s] : f.scores) scores.push_back(ojson::array({id, s}));
  return ojson{{"e", f.epoch}, {"t", f.turn},          {"g", f.ground},         {"a", std::move(actors)},
               {"act", std::move(actions)}, {"r", std::move(rewards)}, {"s", std::move(scores)}};
}

namespace {

template <typename Fn>
auto guarded(std::size_t line, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(e.what(), line);
  }
}

char glyph_of(const std::string& s, std::size_t line) {
  if (s.size() != 1) throw ParseError("glyph must be a single character, got '" + s + "'", line);
  return s[0];
}

}  // namespace

ReplayHeader header_from_json(const ojson& j, std::size_t line) {
  return guarded(line, [&] {
    if (!j.is_object()) throw ParseError("header is not an object", line);
    ReplayHeader h;
    h.format_version = j.at("v").get<int>();
    if (h.format_version != kReplayVersion) {
      throw VersionError("replay format version " + std::to_string(h.format_version) + " is not supported (expected " +
                         std::to_string(kReplayVersion) + ")");
    }
    h.env = j.at("env").get<std::string>();
    h.config = j.at("config");
    for (const auto& v : j.at("vocab")) {
      VocabEntry e;
      e.code = v.at("code").get<Code>();
      e.name = v.at("name").get<std::string>();
      e.glyph = glyph_of(v.at("glyph").get<std::string>(), line);
      const auto layer = v.at("layer").get<std::string>();
      if (layer != "ground" && layer != "actor") throw ParseError("unknown layer '" + layer + "'", line);
      e.layer = layer == "ground" ? Layer::Ground : Layer::Actor;
      h.vocab.push_back(std::move(e));
    }
    h.height = j.at("h").get<std::size_t>();
    h.width = j.at("w").get<std::size_t>();
    h.n_agents = j.at("n").get<std::size_t>();
    return h;
  });
}

FrameRecord frame_from_json(const ojson& j, std::size_t line) {
  return guarded(line, [&] {
    if (!j.is_object()) throw ParseError("frame is not an object", line);
    FrameRecord f;
    f.epoch = j.at("e").get<std::size_t>();
    f.turn = j.at("t").get<std::size_t>();
    f.ground = j.at("g").get<std::vector<Code>>();
    for (const auto& a : j.at("a")) {
      const auto facing = parse_facing(a.at(3).get<std::string>());
      if (!facing) throw ParseError("bad facing in actor entry", line);
      f.actors.push_back({a.at(0).get<std::int32_t>(), a.at(1).get<std::size_t>(), a.at(2).get<std::size_t>(), *facing});
    }
    for (const auto& a : j.at("act")) f.actions.emplace_back(a.at(0).get<std::int32_t>(), a.at(1).get<std::string>());
    for (const auto& r : j.at("r")) f.rewards.emplace_back(r.at(0).get<std::int32_t>(), r.at(1).get<double>());
    for (const auto& s : j.at("s")) f.scores.emplace_back(s.at(0).get<std::int32_t>(), s.at(1).get<double>());
    return f;
  });
}

ReplayWriter::ReplayWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw IoError("cannot open replay file '" + path.string() + "' for writing");
}

void ReplayWriter::write_line(const std::string& line) {
  out_ << line << '\n';
  if (!out_) throw IoError("write to replay file '" + path_.string() + "' failed");
}

void ReplayWriter::write_header(const ReplayHeader& header) { write_line(header_to_json(header).dump()); }
void ReplayWriter::write_frame(const FrameRecord& frame) { write_line(frame_to_json(frame).dump()); }

void ReplayWriter::flush() {
  out_.flush();
  if (!out_) throw IoError("flush of replay file '" + path_.string() + "' failed");
}

void write_replay(const std::filesystem::path& path, const Replay& replay) {
  ReplayWriter w(path);
  w.write_header(replay.header);
  for (const auto& f : replay.frames) w.write_frame(f);
  w.flush();
}

Replay parse_replay(std::istream& in) {
  Replay replay;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (true) {
    if (!std::getline(in, line)) break;
    ++line_no;
    const bool terminated = !in.eof();
    if (!terminated && line.empty()) break;
    if (!terminated) throw ParseError("truncated final line (no newline terminator)", line_no);
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(e.what(), line_no);
    }
    if (!have_header) {
      replay.header = header_from_json(j, line_no);
      have_header = true;
    } else {
      FrameRecord f = frame_from_json(j, line_no);
      if (f.ground.size() != replay.header.height * replay.header.width) {
        throw ParseError("frame has " + std::to_string(f.ground.size()) + " ground cells, header declares " +
                             std::to_string(replay.header.height * replay.header.width),
                         line_no);
      }
      replay.frames.push_back(std::move(f));
    }
  }
  if (!have_header) throw ParseError("replay has no header line", 1);
  return replay;
}

Replay read_replay(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open replay file '" + path.string() + "'");
  return parse_replay(in);
}

std::vector<std::string> render_ascii(const ReplayHeader& header, const FrameRecord& frame) {
  std::map<Code, char> glyphs;
  std::optional<char> agent_glyph;
  for (const auto& v : header.vocab) {
    glyphs[v.code] = v.glyph;
    if (v.layer == Layer::Actor && v.name == "agent") agent_glyph = v.glyph;
  }
  if (frame.ground.size() != header.height * header.width) {
    throw EncodingError("frame ground size does not match the header dimensions");
  }
  std::vector<std::string> lines(header.height, std::string(header.width, ' '));
  for (std::size_t i = 0; i < frame.ground.size(); ++i) {
    const auto it = glyphs.find(frame.ground[i]);
    if (it == glyphs.end()) throw EncodingError("code " + std::to_string(frame.ground[i]) + " is not in the replay vocabulary");
    lines[i / header.width][i % header.width] = it->second;
  }
  for (const auto& a : frame.actors) {
    if (!agent_glyph) throw EncodingError("replay vocabulary has no actor kind named 'agent'");
    if (a.row >= header.height || a.col >= header.width) throw EncodingError("actor outside the frame");
    lines[a.row][a.col] = *agent_glyph;
  }
  return lines;
}

std::vector<std::string> render_world(const GridWorld& world) {
  const Vocabulary& vocab = world.vocab();
  const auto agent = vocab.find("agent");
  std::vector<std::string> lines(world.height(), std::string(world.width(), ' '));
  for (std::size_t r = 0; r < world.height(); ++r) {
    for (std::size_t c = 0; c < world.width(); ++c) {
      const Entity& actor = world.observe({r, c}, Layer::Actor);
      if (actor.code != vocab.actor_empty()) {
        if (!agent) throw EncodingError("vocabulary has no actor kind named 'agent'");
        lines[r][c] = vocab[*agent].glyph;
      } else {
        lines[r][c] = vocab[world.observe({r, c}, Layer::Ground).code].glyph;
      }
    }
  }
  return lines;
}

}  // namespace gridlab
