#pragma once

#include <memory>
#include <string>
#include <thread>

#include "k4i/telemetry/bus.hpp"
#include "k4i/telemetry/rest.hpp"

namespace httplib {
class Server;
}

namespace k4i::telemetry {

/// Serves a RestApi over HTTP/1.1. GET /api/v1/stream?pattern=<topic filter>
/// is a Server-Sent Events stream of TelemetryMessage objects, retained
/// matches first.
class RestServer {
 public:
  RestServer(RestApi api, TopicBus& bus);
  ~RestServer();

  RestServer(const RestServer&) = delete;
  RestServer& operator=(const RestServer&) = delete;

  /// Binds and starts serving. Port 0 picks a free port. Throws a startup Error.
  void start(const std::string& host, int port);
  void stop();
  [[nodiscard]] int port() const noexcept { return port_; }

 private:
  RestApi api_;
  TopicBus& bus_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

/// {"topic": ..., "payload": {...}, "retained": ..., "ts_ms": ...}
std::string message_json(const TelemetryMessage& message);

}  // namespace k4i::telemetry
