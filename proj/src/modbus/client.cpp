#include "k4i/modbus/client.hpp"

#include "k4i/error.hpp"

namespace k4i::modbus {

Frame client_request(RequestChannel& channel, const Frame& request, std::int64_t timeout_ms) {
  channel.send(encode_frame(request));
  const auto deadline = channel.now_ms() + timeout_ms;
  while (auto bytes = channel.receive(deadline)) {
    const auto decoded = decode_frame(*bytes);
    if (decoded.status != DecodeStatus::ok) continue;
    if (decoded.frame.transaction_id != request.transaction_id) continue;
    return decoded.frame;
  }
  throw Error(ErrorKind::timeout, "no response for transaction " + std::to_string(request.transaction_id) +
                                      " within " + std::to_string(timeout_ms) + " ms");
}

}  // namespace k4i::modbus
