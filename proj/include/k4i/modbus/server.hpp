#pragma once

#include <optional>
#include <span>

#include "k4i/modbus/codec.hpp"
#include "k4i/plc/data_store.hpp"

namespace k4i::modbus {

/// Executes one request against a PLC's tables. Never throws: every failure
/// becomes an exception response. Coil and holding-register writes are
/// recorded as pending so the next scan picks them up.
Pdu serve_request(plc::DataStore& store, const Pdu& request);

struct DatagramReply {
  std::optional<Bytes> response;
  bool malformed = false;
};

/// Handles one datagram off the virtual switch. Well-formed frames are served.
/// A malformed frame still gets an illegal-data-value exception when its header
/// carries a transaction id and function code; shorter garbage gets no reply.
DatagramReply serve_datagram(plc::DataStore& store, std::span<const std::uint8_t> bytes);

}  // namespace k4i::modbus
