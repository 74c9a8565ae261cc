#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "k4i/modbus/client.hpp"

namespace k4i::modbus {

/// Blocking Modbus TCP connection to a real socket (the testbed's bridge
/// ports, or any other server).
class TcpChannel final : public RequestChannel {
 public:
  /// Throws a transport Error when the connection is refused.
  TcpChannel(const std::string& host, std::uint16_t port, std::int64_t connect_timeout_ms = 2000);
  ~TcpChannel() override;

  TcpChannel(const TcpChannel&) = delete;
  TcpChannel& operator=(const TcpChannel&) = delete;

  void send(const Bytes& bytes) override;
  std::optional<Bytes> receive(std::int64_t deadline_ms) override;
  std::int64_t now_ms() override;

  /// Sends bytes as-is, without framing checks.
  void send_raw(const Bytes& bytes) { send(bytes); }

 private:
  int fd_ = -1;
  Bytes buffer_;
};

}  // namespace k4i::modbus
