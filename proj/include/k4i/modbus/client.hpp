#pragma once

#include <cstdint>
#include <optional>

#include "k4i/modbus/codec.hpp"

namespace k4i::modbus {

/// Where a client sends request bytes and waits for reply datagrams. Time is
/// whatever clock the channel runs on (simulated or wall).
class RequestChannel {
 public:
  virtual ~RequestChannel() = default;

  /// Throws a transport Error when there is no route to the server.
  virtual void send(const Bytes& bytes) = 0;
  /// Next complete reply, or nullopt once now_ms() reaches the deadline.
  virtual std::optional<Bytes> receive(std::int64_t deadline_ms) = 0;
  virtual std::int64_t now_ms() = 0;
};

/// Sends a request and waits for the reply with the same transaction id.
/// Replies with other ids are discarded. Exception responses are returned as
/// frames; only a missing reply is an error (timeout).
Frame client_request(RequestChannel& channel, const Frame& request, std::int64_t timeout_ms);

}  // namespace k4i::modbus
