#pragma once

#include <deque>
#include <string>

#include "k4i/modbus/client.hpp"
#include "k4i/orchestrator/testbed.hpp"

namespace k4i::orchestrator {

/// Modbus client transport over the simulated switch. Waiting for a reply
/// ticks the testbed, so only use it on a testbed nobody else is driving.
class SimChannel final : public modbus::RequestChannel {
 public:
  SimChannel(Testbed& testbed, std::string src, std::string dst);

  void send(const Bytes& bytes) override;
  std::optional<Bytes> receive(std::int64_t deadline_ms) override;
  std::int64_t now_ms() override { return testbed_.now_ms(); }

 private:
  Testbed& testbed_;
  std::string src_;
  std::string dst_;
  std::deque<Bytes> pending_;
};

}  // namespace k4i::orchestrator
