#include "k4i/modbus/server.hpp"

namespace k4i::modbus {

using plc::DataStore;
using plc::Table;

namespace {

std::uint16_t u16(const Bytes& b, std::size_t at) { return static_cast<std::uint16_t>((b[at] << 8) | b[at + 1]); }

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

Pdu read_bits(const DataStore& store, Table table, const Pdu& req) {
  if (req.body.size() != 4) return exception_pdu(req.function, ExceptionCode::illegal_data_value);
  const auto address = u16(req.body, 0);
  const auto quantity = u16(req.body, 2);
  if (quantity < 1 || quantity > 2000) return exception_pdu(req.function, ExceptionCode::illegal_data_value);
  if (!store.mapped(table, address, quantity)) return exception_pdu(req.function, ExceptionCode::illegal_data_address);
  Pdu resp{req.function, {}};
  const std::size_t count = (quantity + 7u) / 8u;
  resp.body.push_back(static_cast<std::uint8_t>(count));
  resp.body.resize(1 + count, 0);
  for (std::uint16_t i = 0; i < quantity; ++i) {
    if (store.bit(table, static_cast<std::uint16_t>(address + i))) {
      resp.body[1 + i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    }
  }
  return resp;
}

Pdu read_words(const DataStore& store, Table table, const Pdu& req) {
  if (req.body.size() != 4) return exception_pdu(req.function, ExceptionCode::illegal_data_value);
  const auto address = u16(req.body, 0);
  const auto quantity = u16(req.body, 2);
  if (quantity < 1 || quantity > 125) return exception_pdu(req.function, ExceptionCode::illegal_data_value);
  if (!store.mapped(table, address, quantity)) return exception_pdu(req.function, ExceptionCode::illegal_data_address);
  Pdu resp{req.function, {}};
  resp.body.push_back(static_cast<std::uint8_t>(quantity * 2));
  for (std::uint16_t i = 0; i < quantity; ++i) put_u16(resp.body, store.word(table, static_cast<std::uint16_t>(address + i)));
  return resp;
}

Pdu write_coil(DataStore& store, const Pdu& req) {
  if (req.body.size() != 4) return exception_pdu(req.function, ExceptionCode::illegal_data_value);
  const auto address = u16(req.body, 0);
  const auto value = u16(req.body, 2);
  if (value != 0xFF00 && value != 0x0000) return exception_pdu(req.function, ExceptionCode::illegal_data_value);
  if (!store.mapped(Table::coils, address)) return exception_pdu(req.function, ExceptionCode::illegal_data_address);
  store.remote_write_bit(address, value == 0xFF00);
  return req;
}

Pdu write_register(DataStore& store, const Pdu& req) {
  if (req.body.size() != 4) return exception_pdu(req.function, ExceptionCode::illegal_data_value);
  const auto address = u16(req.body, 0);
  if (!store.mapped(Table::holding_registers, address)) {
    return exception_pdu(req.function, ExceptionCode::illegal_data_address);
  }
  store.remote_write_word(address, u16(req.body, 2));
  return req;
}

Pdu write_coils(DataStore& store, const Pdu& req) {
  if (req.body.size() < 5) return exception_pdu(req.function, ExceptionCode::illegal_data_value);
  const auto address = u16(req.body, 0);
  const auto quantity = u16(req.body, 2);
  const auto byte_count = req.body[4];
  if (quantity < 1 || quantity > 1968 || byte_count != (quantity + 7u) / 8u ||
      req.body.size() != 5u + byte_count) {
    return exception_pdu(req.function, ExceptionCode::illegal_data_value);
  }
  if (!store.mapped(Table::coils, address, quantity)) {
    return exception_pdu(req.function, ExceptionCode::illegal_data_address);
  }
  for (std::uint16_t i = 0; i < quantity; ++i) {
    const bool on = (req.body[5 + i / 8] >> (i % 8)) & 1u;
    store.remote_write_bit(static_cast<std::uint16_t>(address + i), on);
  }
  Pdu resp{req.function, {}};
  put_u16(resp.body, address);
  put_u16(resp.body, quantity);
  return resp;
}

Pdu write_registers(DataStore& store, const Pdu& req) {
  if (req.body.size() < 5) return exception_pdu(req.function, ExceptionCode::illegal_data_value);
  const auto address = u16(req.body, 0);
  const auto quantity = u16(req.body, 2);
  const auto byte_count = req.body[4];
  if (quantity < 1 || quantity > 123 || byte_count != quantity * 2u || req.body.size() != 5u + byte_count) {
    return exception_pdu(req.function, ExceptionCode::illegal_data_value);
  }
  if (!store.mapped(Table::holding_registers, address, quantity)) {
    return exception_pdu(req.function, ExceptionCode::illegal_data_address);
  }
  for (std::uint16_t i = 0; i < quantity; ++i) {
    store.remote_write_word(static_cast<std::uint16_t>(address + i), u16(req.body, 5 + 2u * i));
  }
  Pdu resp{req.function, {}};
  put_u16(resp.body, address);
  put_u16(resp.body, quantity);
  return resp;
}

}  // namespace

Pdu serve_request(DataStore& store, const Pdu& request) {
  try {
    switch (request.function) {
      case 0x01: return read_bits(store, Table::coils, request);
      case 0x02: return read_bits(store, Table::discrete_inputs, request);
      case 0x03: return read_words(store, Table::holding_registers, request);
      case 0x04: return read_words(store, Table::input_registers, request);
      case 0x05: return write_coil(store, request);
      case 0x06: return write_register(store, request);
      case 0x0F: return write_coils(store, request);
      case 0x10: return write_registers(store, request);
      default: return exception_pdu(request.function, ExceptionCode::illegal_function);
    }
  } catch (...) {
    return exception_pdu(request.function, ExceptionCode::server_device_failure);
  }
}

DatagramReply serve_datagram(DataStore& store, std::span<const std::uint8_t> bytes) {
  DatagramReply reply;
  const auto decoded = decode_frame(bytes);
  if (decoded.status == DecodeStatus::ok) {
    Frame response = decoded.frame;
    response.pdu = serve_request(store, decoded.frame.pdu);
    reply.response = encode_frame(response);
    return reply;
  }
  reply.malformed = true;
  if (bytes.size() >= mbap_header_size + 1) {
    Frame response;
    response.transaction_id = static_cast<std::uint16_t>((bytes[0] << 8) | bytes[1]);
    response.unit_id = bytes[6];
    response.pdu = exception_pdu(bytes[7], ExceptionCode::illegal_data_value);
    reply.response = encode_frame(response);
  }
  return reply;
}

}  // namespace k4i::modbus
