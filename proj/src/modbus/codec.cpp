#include "k4i/modbus/codec.hpp"

#include <cstdio>

#include "k4i/error.hpp"

namespace k4i::modbus {

namespace {

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>((b[at] << 8) | b[at + 1]);
}

}  // namespace

bool is_supported(std::uint8_t function) {
  switch (function) {
    case 0x01: case 0x02: case 0x03: case 0x04: case 0x05: case 0x06: case 0x0F: case 0x10:
      return true;
    default:
      return false;
  }
}

Bytes encode_frame(const Frame& frame) {
  if (frame.pdu.body.size() > max_pdu_body) {
    throw Error(ErrorKind::encoding, "PDU body of " + std::to_string(frame.pdu.body.size()) + " bytes exceeds 252");
  }
  if (frame.protocol_id != 0) throw Error(ErrorKind::encoding, "protocol id must be 0");
  Bytes out;
  out.reserve(mbap_header_size + 1 + frame.pdu.body.size());
  put_u16(out, frame.transaction_id);
  put_u16(out, frame.protocol_id);
  put_u16(out, frame.length());
  out.push_back(frame.unit_id);
  out.push_back(frame.pdu.function);
  out.insert(out.end(), frame.pdu.body.begin(), frame.pdu.body.end());
  return out;
}

DecodeResult decode_frame(std::span<const std::uint8_t> bytes) {
  DecodeResult r;
  if (bytes.size() < mbap_header_size) {
    r.status = DecodeStatus::incomplete;
    return r;
  }
  const auto protocol = get_u16(bytes, 2);
  const auto length = get_u16(bytes, 4);
  if (protocol != 0) {
    r.status = DecodeStatus::protocol_error;
    r.error = "protocol id " + std::to_string(protocol) + " is not Modbus";
    return r;
  }
  if (length < 2 || length > 2 + max_pdu_body) {
    r.status = DecodeStatus::protocol_error;
    r.error = "MBAP length " + std::to_string(length) + " out of range";
    return r;
  }
  const std::size_t total = 6 + static_cast<std::size_t>(length);
  if (bytes.size() < total) {
    r.status = DecodeStatus::incomplete;
    return r;
  }
  r.status = DecodeStatus::ok;
  r.frame.transaction_id = get_u16(bytes, 0);
  r.frame.protocol_id = protocol;
  r.frame.unit_id = bytes[6];
  r.frame.pdu.function = bytes[7];
  r.frame.pdu.body.assign(bytes.begin() + 8, bytes.begin() + static_cast<std::ptrdiff_t>(total));
  r.consumed = total;
  return r;
}

Pdu exception_pdu(std::uint8_t function, ExceptionCode code) {
  return Pdu{static_cast<std::uint8_t>(function | 0x80), {static_cast<std::uint8_t>(code)}};
}

Pdu read_request(FunctionCode function, std::uint16_t address, std::uint16_t quantity) {
  Pdu p{static_cast<std::uint8_t>(function), {}};
  put_u16(p.body, address);
  put_u16(p.body, quantity);
  return p;
}

Pdu write_single_coil(std::uint16_t address, bool on) {
  Pdu p{static_cast<std::uint8_t>(FunctionCode::write_single_coil), {}};
  put_u16(p.body, address);
  put_u16(p.body, on ? 0xFF00 : 0x0000);
  return p;
}

Pdu write_single_register(std::uint16_t address, std::uint16_t value) {
  Pdu p{static_cast<std::uint8_t>(FunctionCode::write_single_register), {}};
  put_u16(p.body, address);
  put_u16(p.body, value);
  return p;
}

Pdu write_multiple_coils(std::uint16_t address, std::span<const bool> values) {
  Pdu p{static_cast<std::uint8_t>(FunctionCode::write_multiple_coils), {}};
  put_u16(p.body, address);
  put_u16(p.body, static_cast<std::uint16_t>(values.size()));
  const std::size_t count = (values.size() + 7) / 8;
  p.body.push_back(static_cast<std::uint8_t>(count));
  for (std::size_t i = 0; i < count; ++i) {
    std::uint8_t byte = 0;
    for (std::size_t bit = 0; bit < 8 && i * 8 + bit < values.size(); ++bit) {
      if (values[i * 8 + bit]) byte |= static_cast<std::uint8_t>(1u << bit);
    }
    p.body.push_back(byte);
  }
  return p;
}

Pdu write_multiple_registers(std::uint16_t address, std::span<const std::uint16_t> values) {
  Pdu p{static_cast<std::uint8_t>(FunctionCode::write_multiple_registers), {}};
  put_u16(p.body, address);
  put_u16(p.body, static_cast<std::uint16_t>(values.size()));
  p.body.push_back(static_cast<std::uint8_t>(values.size() * 2));
  for (auto v : values) put_u16(p.body, v);
  return p;
}

std::string_view exception_name(std::uint8_t code) {
  switch (code) {
    case 0x01: return "illegal function";
    case 0x02: return "illegal data address";
    case 0x03: return "illegal data value";
    case 0x04: return "server device failure";
    default: return "unknown exception";
  }
}

std::string describe(const Pdu& pdu) {
  char buf[96];
  if (pdu.is_exception()) {
    std::snprintf(buf, sizeof buf, "exception 0x%02X code 0x%02X (%s)", pdu.function, pdu.exception_code(),
                  std::string(exception_name(pdu.exception_code())).c_str());
    return buf;
  }
  std::snprintf(buf, sizeof buf, "function 0x%02X", pdu.function);
  return std::string(buf) + " data " + (pdu.body.empty() ? std::string("-") : to_hex(pdu.body));
}

}  // namespace k4i::modbus
