#include "k4i/telemetry/http_server.hpp"

#include <chrono>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "k4i/error.hpp"

namespace k4i::telemetry {

std::string message_json(const TelemetryMessage& message) {
  nlohmann::ordered_json j;
  j["topic"] = message.topic;
  j["payload"] = nlohmann::ordered_json::parse(message.payload);
  j["retained"] = message.retained;
  j["ts_ms"] = message.ts_ms;
  return j.dump();
}

RestServer::RestServer(RestApi api, TopicBus& bus)
    : api_(std::move(api)), bus_(bus), server_(std::make_unique<httplib::Server>()) {
  server_->Get("/api/v1/stream", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string pattern = req.has_param("pattern") ? req.get_param_value("pattern") : "k4i/#";
    std::size_t limit = 0;
    if (req.has_param("limit")) {
      try {
        limit = std::stoul(req.get_param_value("limit"));
      } catch (const std::exception&) {
        res.status = 400;
        res.set_content(R"({"error":"limit must be a non-negative integer"})", "application/json");
        return;
      }
    }
    std::shared_ptr<Subscription> sub;
    try {
      sub = bus_.subscribe(pattern);
    } catch (const Error& e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
      return;
    }
    auto sent = std::make_shared<std::size_t>(0);
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [sub, sent, limit](std::size_t, httplib::DataSink& sink) {
          if (limit != 0 && *sent >= limit) {
            sink.done();
            return true;
          }
          if (auto m = sub->next(std::chrono::milliseconds(250))) {
            const std::string frame = "data: " + message_json(*m) + "\n\n";
            ++*sent;
            return sink.write(frame.data(), frame.size());
          }
          static constexpr char keepalive[] = ": keepalive\n\n";
          return sink.write(keepalive, sizeof keepalive - 1);
        },
        [this, sub](bool) { bus_.unsubscribe(sub); });
  });

  auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    RestRequest r;
    r.method = req.method;
    r.path = req.path;
    r.body = req.body;
    for (const auto& [k, v] : req.params) r.query[k] = v;
    const auto out = api_.handle(r);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  server_->Get(".*", dispatch);
  server_->Post(".*", dispatch);
  server_->Put(".*", dispatch);
  server_->Delete(".*", dispatch);
}

RestServer::~RestServer() { stop(); }

void RestServer::start(const std::string& host, int port) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
    if (port_ <= 0) throw Error(ErrorKind::startup, "cannot bind REST server on " + host);
  } else {
    if (!server_->bind_to_port(host, port))
      throw Error(ErrorKind::startup, "cannot bind REST server on " + host + ":" + std::to_string(port));
    port_ = port;
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void RestServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace k4i::telemetry
