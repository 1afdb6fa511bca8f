#pragma once

// Live session protocol. Every WebSocket text frame on /session carries one
// JSON object with a "type" field.
//
// client -> server
//   {"type":"join","role":"human","agent_id":0}
//   {"type":"join","role":"spectator"}
//   {"type":"action","agent_id":0,"action":"up"}
//   {"type":"ping"}
//
// server -> client
//   {"type":"joined","role":"human","agent_id":0,"header":{...}|null}
//   {"type":"frame","frame":{...}}            header added on the join snapshot
//   {"type":"await_action","agent_id":0,"deadline_ms":10000,"epoch":0,"turn":3}
//   {"type":"epoch_end","metrics":{"epoch":0,"rewards":[..],"mean_loss":null,"epsilon":1,"wall_ms":0}}
//   {"type":"run_end"}
//   {"type":"pong"}
//   {"type":"error","message":"..."}
//
// The header and frame objects are the replay lines verbatim.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridlab/experiment.hpp"

namespace gridlab {

struct ClientMessage {
  enum class Kind { Join, Action, Ping };
  Kind kind = Kind::Ping;
  bool human = false;  // join role
  std::optional<std::int32_t> agent_id;
  std::string action;
};

/// Throws ProtocolError with a message suitable for an error reply.
ClientMessage parse_client_message(std::string_view text);

std::string joined_message(bool human, std::optional<std::int32_t> agent_id, const std::string* header_json);
std::string frame_message(const std::string& frame_json, const std::string* header_json);
std::string await_message(std::int32_t agent_id, std::int64_t deadline_ms, std::size_t epoch, std::size_t turn);
std::string epoch_end_message(const EpochMetrics& m);
std::string error_message(std::string_view what);
std::string run_end_message();
std::string pong_message();

struct SessionOptions {
  std::string address = "127.0.0.1";
  /// 0 picks a free port.
  std::uint16_t port = 0;
  /// Static UI bundle served at /. A placeholder page is served without one.
  std::optional<std::filesystem::path> ui_dir;
  /// Spectator frames beyond this many queued are dropped.
  std::size_t spectator_queue_limit = 256;
};

/// WebSocket session server around one experiment run. The listener is bound
/// in the constructor and connections are handled on a background thread;
/// run() drives the experiment on the calling thread.
class SessionServer {
 public:
  /// Throws ConfigError when the config has no human slot and IoError when
  /// the port cannot be bound.
  SessionServer(ExperimentConfig config, SessionOptions options = {});
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  std::uint16_t port() const;

  /// Runs the experiment. Extra hooks are called after the server's own.
  std::vector<EpochMetrics> run(const RunHooks& extra = {});

  /// Replay text of the finished run, empty before.
  std::string replay_text() const;
  /// Spectator frames dropped so far because of a full queue.
  std::size_t dropped_frames() const;

  /// Stops accepting and closes every connection.
  void stop();

  HumanActionSource& human_source();

  struct State;

 private:
  std::shared_ptr<State> state_;
};

}  // namespace gridlab
