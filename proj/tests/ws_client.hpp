#pragma once

// Minimal blocking WebSocket and HTTP client for driving SessionServer.

#include <sys/socket.h>
#include <sys/time.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>
#include <string>

namespace gridlab::testing {

namespace beast = boost::beast;
namespace asio = boost::asio;
using tcp = asio::ip::tcp;

inline void set_receive_timeout(tcp::socket& s, int ms) {
  timeval tv{ms / 1000, (ms % 1000) * 1000};
  ::setsockopt(s.native_handle(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
}

class WsClient {
 public:
  explicit WsClient(std::uint16_t port, int timeout_ms = 10000) : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    asio::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    set_receive_timeout(ws_.next_layer(), timeout_ms);
    ws_.next_layer().set_option(tcp::no_delay(true));
    ws_.handshake("127.0.0.1", "/session");
  }

  void send(const std::string& text) { ws_.write(asio::buffer(text)); }
  void send(const nlohmann::json& j) { send(j.dump()); }

  /// Throws boost::system::system_error on timeout or close.
  std::string read_text() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return beast::buffers_to_string(buf.data());
  }
  nlohmann::json read() { return nlohmann::json::parse(read_text()); }

  /// Reads until a message of the given type arrives.
  nlohmann::json read_until(const std::string& type) {
    for (;;) {
      auto j = read();
      if (j.at("type") == type) return j;
    }
  }

  void close() {
    beast::error_code ec;
    ws_.close(beast::websocket::close_code::normal, ec);
  }

 private:
  asio::io_context ioc_;
  beast::websocket::stream<tcp::socket> ws_;
};

struct HttpResult {
  int status = 0;
  std::string content_type;
  std::string body;
};

inline HttpResult http_get(std::uint16_t port, const std::string& target) {
  namespace http = beast::http;
  asio::io_context ioc;
  tcp::socket sock(ioc);
  tcp::resolver resolver(ioc);
  asio::connect(sock, resolver.resolve("127.0.0.1", std::to_string(port)));
  set_receive_timeout(sock, 10000);
  http::request<http::empty_body> req(http::verb::get, target, 11);
  req.set(http::field::host, "127.0.0.1");
  http::write(sock, req);
  beast::flat_buffer buf;
  http::response<http::string_body> res;
  http::read(sock, buf, res);
  return {static_cast<int>(res.result_int()), std::string(res[http::field::content_type]), res.body()};
}

}  // namespace gridlab::testing
