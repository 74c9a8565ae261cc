#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "k4i/hex.hpp"

namespace k4i::modbus {

enum class FunctionCode : std::uint8_t {
  read_coils = 0x01,
  read_discrete_inputs = 0x02,
  read_holding_registers = 0x03,
  read_input_registers = 0x04,
  write_single_coil = 0x05,
  write_single_register = 0x06,
  write_multiple_coils = 0x0F,
  write_multiple_registers = 0x10,
};

enum class ExceptionCode : std::uint8_t {
  illegal_function = 0x01,
  illegal_data_address = 0x02,
  illegal_data_value = 0x03,
  server_device_failure = 0x04,
};

inline constexpr std::size_t max_pdu_body = 252;
inline constexpr std::size_t mbap_header_size = 7;
inline constexpr std::uint8_t default_unit_id = 1;

bool is_supported(std::uint8_t function);

struct Pdu {
  std::uint8_t function = 0;
  Bytes body;

  [[nodiscard]] bool is_exception() const noexcept { return (function & 0x80) != 0; }
  /// Exception code of an exception response, 0 otherwise.
  [[nodiscard]] std::uint8_t exception_code() const noexcept {
    return is_exception() && body.size() == 1 ? body[0] : 0;
  }

  friend bool operator==(const Pdu&, const Pdu&) = default;
};

/// MBAP-framed request or response. The length field is derived on encode.
struct Frame {
  std::uint16_t transaction_id = 0;
  std::uint16_t protocol_id = 0;
  std::uint8_t unit_id = default_unit_id;
  Pdu pdu;

  /// Unit id plus PDU bytes, as carried in the MBAP length field.
  [[nodiscard]] std::uint16_t length() const noexcept {
    return static_cast<std::uint16_t>(2 + pdu.body.size());
  }

  friend bool operator==(const Frame&, const Frame&) = default;
};

/// Throws an encoding Error for an oversize PDU or a non-zero protocol id.
Bytes encode_frame(const Frame& frame);

enum class DecodeStatus { ok, incomplete, protocol_error };

struct DecodeResult {
  DecodeStatus status = DecodeStatus::incomplete;
  Frame frame;
  std::size_t consumed = 0;
  std::string error;
};

/// Parses one frame from the front of a byte stream; trailing bytes are left
/// for the next call (see consumed).
DecodeResult decode_frame(std::span<const std::uint8_t> bytes);

Pdu exception_pdu(std::uint8_t function, ExceptionCode code);

// Request builders.
Pdu read_request(FunctionCode function, std::uint16_t address, std::uint16_t quantity);
Pdu write_single_coil(std::uint16_t address, bool on);
Pdu write_single_register(std::uint16_t address, std::uint16_t value);
Pdu write_multiple_coils(std::uint16_t address, std::span<const bool> values);
Pdu write_multiple_registers(std::uint16_t address, std::span<const std::uint16_t> values);

/// Human-readable one-liner, e.g. "exception 0x85 code 0x02 (illegal data address)".
std::string describe(const Pdu& pdu);
std::string_view exception_name(std::uint8_t code);

}  // namespace k4i::modbus
