#include "gridlab/session.hpp"

#include <atomic>
#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "gridlab/errors.hpp"

namespace gridlab {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Messages

ClientMessage parse_client_message(std::string_view text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    throw ProtocolError("message is not valid JSON");
  }
  if (!j.is_object()) throw ProtocolError("message must be a JSON object");
  const auto type = j.find("type");
  if (type == j.end() || !type->is_string()) throw ProtocolError("message has no string 'type' field");

  auto agent_id = [&]() -> std::optional<std::int32_t> {
    const auto it = j.find("agent_id");
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_number_integer()) throw ProtocolError("agent_id must be an integer");
    return it->get<std::int32_t>();
  };

  ClientMessage m;
  const auto t = type->get<std::string>();
  if (t == "join") {
    m.kind = ClientMessage::Kind::Join;
    const auto role = j.find("role");
    if (role == j.end() || !role->is_string()) throw ProtocolError("join needs a role");
    const auto r = role->get<std::string>();
    if (r != "human" && r != "spectator") throw ProtocolError("unknown role '" + r + "'");
    m.human = r == "human";
    m.agent_id = agent_id();
    if (m.human && !m.agent_id) throw ProtocolError("human join needs an agent_id");
  } else if (t == "action") {
    m.kind = ClientMessage::Kind::Action;
    m.agent_id = agent_id();
    if (!m.agent_id) throw ProtocolError("action needs an agent_id");
    const auto a = j.find("action");
    if (a == j.end() || !a->is_string()) throw ProtocolError("action needs an action name");
    m.action = a->get<std::string>();
  } else if (t == "ping") {
    m.kind = ClientMessage::Kind::Ping;
  } else {
    throw ProtocolError("unknown message type '" + t + "'");
  }
  return m;
}

namespace {

// Splices pre-serialized header/frame JSON so they stay byte-identical to
// the replay lines.
std::string splice(std::string head, std::initializer_list<std::pair<const char*, const std::string*>> raw) {
  head.pop_back();  // '}'
  for (const auto& [key, text] : raw) {
    head += ",\"";
    head += key;
    head += "\":";
    head += text ? *text : "null";
  }
  head += '}';
  return head;
}

}  // namespace

std::string joined_message(bool human, std::optional<std::int32_t> agent_id, const std::string* header_json) {
  ojson j{{"type", "joined"}, {"role", human ? "human" : "spectator"}};
  j["agent_id"] = agent_id ? ojson(*agent_id) : ojson(nullptr);
  return splice(j.dump(), {{"header", header_json}});
}

std::string frame_message(const std::string& frame_json, const std::string* header_json) {
  const std::string head = ojson{{"type", "frame"}}.dump();
  if (header_json) return splice(head, {{"header", header_json}, {"frame", &frame_json}});
  return splice(head, {{"frame", &frame_json}});
}

std::string await_message(std::int32_t agent_id, std::int64_t deadline_ms, std::size_t epoch, std::size_t turn) {
  return ojson{{"type", "await_action"}, {"agent_id", agent_id}, {"deadline_ms", deadline_ms}, {"epoch", epoch}, {"turn", turn}}
      .dump();
}

std::string epoch_end_message(const EpochMetrics& m) {
  ojson metrics{{"epoch", m.epoch}, {"rewards", m.per_agent_reward}};
  metrics["mean_loss"] = m.mean_loss ? ojson(*m.mean_loss) : ojson(nullptr);
  metrics["epsilon"] = m.epsilon;
  metrics["wall_ms"] = m.wall_ms;
  return ojson{{"type", "epoch_end"}, {"metrics", std::move(metrics)}}.dump();
}

std::string error_message(std::string_view what) { return ojson{{"type", "error"}, {"message", what}}.dump(); }
std::string run_end_message() { return ojson{{"type", "run_end"}}.dump(); }
std::string pong_message() { return ojson{{"type", "pong"}}.dump(); }

// ---------------------------------------------------------------------------
// Server

namespace {

class WsConn;
using Msg = std::shared_ptr<const std::string>;

const char* kPlaceholderPage =
    "<!doctype html><html><head><meta charset=\"utf-8\"><title>gridlab</title></head>"
    "<body><p>gridlab session server. Connect a client to <code>/session</code>; "
    "the finished run's replay is at <code>/replay</code>.</p></body></html>\n";

std::string mime_for(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

}  // namespace

struct SessionServer::State : std::enable_shared_from_this<SessionServer::State> {
  ExperimentConfig config;
  SessionOptions options;
  std::vector<std::string> action_names;
  HumanActionSource source;

  asio::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::thread io_thread;

  mutable std::mutex mu;
  std::set<std::shared_ptr<WsConn>> conns;
  std::map<std::int32_t, std::weak_ptr<WsConn>> human_slots;
  std::optional<std::string> header_json;
  std::optional<std::string> latest_frame;
  std::optional<std::string> pending_await;
  std::int32_t pending_await_agent = -1;
  std::size_t epoch = 0;
  std::size_t turn = 0;
  bool finished = false;
  std::string replay;
  std::atomic<std::size_t> dropped{0};
  std::atomic<bool> stopped{false};

  State(ExperimentConfig c, SessionOptions o)
      : config(std::move(c)),
        options(std::move(o)),
        source(std::chrono::milliseconds(config.human_timeout_ms)) {}

  void accept_loop();
  // Queues msg for every joined connection, as of now. Call with mu held.
  void broadcast_locked(Msg msg);
  void handle_message(const std::shared_ptr<WsConn>& conn, const std::string& text);
  void drop(const std::shared_ptr<WsConn>& conn);
};

namespace {

class WsConn : public std::enable_shared_from_this<WsConn> {
 public:
  WsConn(tcp::socket socket, std::shared_ptr<SessionServer::State> state)
      : ws_(std::move(socket)), state_(std::move(state)) {}

  template <typename Request>
  void start(Request req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().set_option(tcp::no_delay(true), ec);  // one small message per turn
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->read();
    });
  }

  // io thread only
  void send(Msg msg) {
    if (closed_) return;
    if (!human_ && queue_.size() >= state_->options.spectator_queue_limit) {
      ++state_->dropped;
      return;
    }
    queue_.push_back(std::move(msg));
    if (queue_.size() == 1) write();
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

  bool human_ = false;
  std::optional<std::int32_t> agent_id_;
  bool joined_ = false;

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        self->state_->drop(self);
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->state_->handle_message(self, text);
      self->read();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(*queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->queue_.clear();
        return;
      }
      self->queue_.pop_front();
      if (!self->queue_.empty()) self->write();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<Msg> queue_;
  bool closed_ = false;
  std::shared_ptr<SessionServer::State> state_;
};

class HttpConn : public std::enable_shared_from_this<HttpConn> {
 public:
  HttpConn(tcp::socket socket, std::shared_ptr<SessionServer::State> state)
      : stream_(std::move(socket)), state_(std::move(state)) {}

  void start() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return;
      self->dispatch();
    });
  }

 private:
  void dispatch() {
    const std::string target(req_.target());
    if (websocket::is_upgrade(req_)) {
      if (target != "/session") return respond(http::status::not_found, "text/plain", "no websocket endpoint here\n");
      stream_.expires_never();
      auto conn = std::make_shared<WsConn>(stream_.release_socket(), state_);
      conn->start(std::move(req_));
      return;
    }
    if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
      return respond(http::status::method_not_allowed, "text/plain", "read-only\n");
    }
    if (target == "/replay") {
      std::lock_guard lock(state_->mu);
      if (!state_->finished) return respond(http::status::not_found, "text/plain", "run not finished\n");
      return respond(http::status::ok, "application/x-ndjson", state_->replay);
    }
    serve_static(target);
  }

  void serve_static(std::string target) {
    if (const auto q = target.find('?'); q != std::string::npos) target.resize(q);
    if (target.empty() || target == "/") target = "/index.html";
    if (!state_->options.ui_dir) {
      if (target == "/index.html") return respond(http::status::ok, "text/html; charset=utf-8", kPlaceholderPage);
      return respond(http::status::not_found, "text/plain", "not found\n");
    }
    const std::filesystem::path rel = std::filesystem::path(target.substr(1)).lexically_normal();
    if (rel.empty() || *rel.begin() == "..") return respond(http::status::not_found, "text/plain", "not found\n");
    const auto path = *state_->options.ui_dir / rel;
    std::ifstream in(path, std::ios::binary);
    if (!in) return respond(http::status::not_found, "text/plain", "not found\n");
    std::ostringstream body;
    body << in.rdbuf();
    respond(http::status::ok, mime_for(path), body.str());
  }

  void respond(http::status status, const std::string& type, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::server, "gridlab");
    res->set(http::field::content_type, type);
    res->keep_alive(false);
    const bool head = req_.method() == http::verb::head;
    res->body() = head ? std::string() : std::move(body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ec;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  std::shared_ptr<SessionServer::State> state_;
};

}  // namespace

void SessionServer::State::accept_loop() {
  acceptor.async_accept([self = shared_from_this()](beast::error_code ec, tcp::socket socket) {
    if (ec) return;
    std::make_shared<HttpConn>(std::move(socket), self)->start();
    self->accept_loop();
  });
}

void SessionServer::State::broadcast_locked(Msg msg) {
  std::vector<std::shared_ptr<WsConn>> targets(conns.begin(), conns.end());
  asio::post(ioc, [targets = std::move(targets), msg = std::move(msg)] {
    for (const auto& c : targets) c->send(msg);
  });
}

void SessionServer::State::drop(const std::shared_ptr<WsConn>& conn) {
  std::lock_guard lock(mu);
  conns.erase(conn);
  if (conn->human_ && conn->agent_id_) {
    const auto it = human_slots.find(*conn->agent_id_);
    if (it != human_slots.end() && it->second.lock() == conn) human_slots.erase(it);
  }
}

void SessionServer::State::handle_message(const std::shared_ptr<WsConn>& conn, const std::string& text) {
  auto reply = [&](std::string s) { conn->send(std::make_shared<const std::string>(std::move(s))); };
  ClientMessage m;
  try {
    m = parse_client_message(text);
  } catch (const ProtocolError& e) {
    return reply(error_message(e.what()));
  }

  switch (m.kind) {
    case ClientMessage::Kind::Ping:
      return reply(pong_message());

    case ClientMessage::Kind::Join: {
      std::lock_guard lock(mu);
      if (conn->joined_) return reply(error_message("already joined"));
      if (m.human) {
        const std::int32_t id = *m.agent_id;
        if (!config.is_human(id)) return reply(error_message("agent " + std::to_string(id) + " is not a human slot"));
        const auto it = human_slots.find(id);
        if (it != human_slots.end() && !it->second.expired()) {
          return reply(error_message("agent " + std::to_string(id) + " already has a human client"));
        }
        human_slots[id] = conn;
      }
      conn->joined_ = true;
      conn->human_ = m.human;
      conn->agent_id_ = m.agent_id;
      conns.insert(conn);
      const std::string* header = header_json ? &*header_json : nullptr;
      reply(joined_message(m.human, m.agent_id, header));
      if (latest_frame) reply(frame_message(*latest_frame, header));
      if (pending_await && pending_await_agent == m.agent_id) reply(*pending_await);
      return;
    }

    case ClientMessage::Kind::Action: {
      const std::int32_t id = *m.agent_id;
      {
        std::lock_guard lock(mu);
        const auto it = human_slots.find(id);
        if (it == human_slots.end() || it->second.lock() != conn) {
          return reply(error_message("this connection does not control agent " + std::to_string(id)));
        }
      }
      const auto a = std::find(action_names.begin(), action_names.end(), m.action);
      if (a == action_names.end()) return reply(error_message("unknown action '" + m.action + "'"));
      if (!source.submit_if_awaiting(id, static_cast<std::size_t>(a - action_names.begin()))) {
        return reply(error_message("agent " + std::to_string(id) + " is not awaiting an action"));
      }
      return;
    }
  }
}

SessionServer::SessionServer(ExperimentConfig config, SessionOptions options)
    : state_(std::make_shared<State>(std::move(config), std::move(options))) {
  auto& s = *state_;
  if (s.config.human_agents.empty()) throw ConfigError("a session needs at least one human agent slot");
  validate(s.config);
  const Environment probe = make_environment(s.config, epoch_seed(s.config.seed, 0));
  const ActionSpec& spec = probe.agents.front().action_spec;
  for (std::size_t i = 0; i < spec.count(); ++i) s.action_names.emplace_back(spec.name(i));

  try {
    const tcp::endpoint ep(asio::ip::make_address(s.options.address), s.options.port);
    s.acceptor.open(ep.protocol());
    s.acceptor.set_option(asio::socket_base::reuse_address(true));
    s.acceptor.bind(ep);
    s.acceptor.listen();
  } catch (const boost::system::system_error& e) {
    throw IoError("cannot listen on " + s.options.address + ":" + std::to_string(s.options.port) + ": " + e.what());
  }
  s.accept_loop();
  s.io_thread = std::thread([st = state_] { st->ioc.run(); });
}

SessionServer::~SessionServer() { stop(); }

std::uint16_t SessionServer::port() const { return state_->acceptor.local_endpoint().port(); }

HumanActionSource& SessionServer::human_source() { return state_->source; }

std::string SessionServer::replay_text() const {
  std::lock_guard lock(state_->mu);
  return state_->finished ? state_->replay : std::string();
}

std::size_t SessionServer::dropped_frames() const { return state_->dropped.load(); }

void SessionServer::stop() {
  auto& s = *state_;
  if (s.stopped.exchange(true)) return;
  asio::post(s.ioc, [st = state_] {
    beast::error_code ec;
    st->acceptor.close(ec);
    std::lock_guard lock(st->mu);
    for (const auto& c : st->conns) c->close();
  });
  // Give queued writes a moment to drain before the loop is torn down.
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  s.ioc.stop();
  if (s.io_thread.joinable()) s.io_thread.join();
  // Break the State <-> connection cycles.
  std::lock_guard lock(s.mu);
  s.conns.clear();
  s.human_slots.clear();
}

std::vector<EpochMetrics> SessionServer::run(const RunHooks& extra) {
  auto& s = *state_;
  RunHooks hooks = extra;
  hooks.human_source = &s.source;

  hooks.on_header = [&s, &extra](const ReplayHeader& h) {
    {
      std::lock_guard lock(s.mu);
      s.header_json = header_to_json(h).dump();
      s.replay = *s.header_json + '\n';
    }
    if (extra.on_header) extra.on_header(h);
  };
  hooks.on_turn_start = [&s, &extra](std::size_t epoch, std::size_t turn) {
    {
      std::lock_guard lock(s.mu);
      s.epoch = epoch;
      s.turn = turn;
    }
    if (extra.on_turn_start) extra.on_turn_start(epoch, turn);
  };
  hooks.on_frame = [&s, &extra](const Environment& env, const FrameRecord& f, const TurnOutcome& o) {
    {
      std::lock_guard lock(s.mu);
      s.latest_frame = frame_to_json(f).dump();
      s.replay += *s.latest_frame + '\n';
      s.broadcast_locked(std::make_shared<const std::string>(frame_message(*s.latest_frame, nullptr)));
    }
    if (extra.on_frame) extra.on_frame(env, f, o);
  };
  hooks.on_epoch_end = [&s, &extra](const EpochMetrics& m) {
    {
      std::lock_guard lock(s.mu);
      s.broadcast_locked(std::make_shared<const std::string>(epoch_end_message(m)));
    }
    if (extra.on_epoch_end) extra.on_epoch_end(m);
  };

  s.source.set_await_hook([&s](std::int32_t id, std::chrono::milliseconds timeout) {
    std::lock_guard lock(s.mu);
    s.pending_await = await_message(id, timeout.count(), s.epoch, s.turn);
    s.pending_await_agent = id;
    s.broadcast_locked(std::make_shared<const std::string>(*s.pending_await));
  });
  s.source.set_resolve_hook([&s](std::int32_t, std::size_t, bool) {
    std::lock_guard lock(s.mu);
    s.pending_await.reset();
    s.pending_await_agent = -1;
  });

  auto metrics = run_experiment(s.config, hooks);
  {
    std::lock_guard lock(s.mu);
    s.finished = true;
    s.broadcast_locked(std::make_shared<const std::string>(run_end_message()));
  }
  return metrics;
}

}  // namespace gridlab
