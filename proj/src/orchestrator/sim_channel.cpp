#include "k4i/orchestrator/sim_channel.hpp"

#include "k4i/error.hpp"

namespace k4i::orchestrator {

SimChannel::SimChannel(Testbed& testbed, std::string src, std::string dst)
    : testbed_(testbed), src_(std::move(src)) {
  const auto resolved = testbed_.resolve_endpoint(dst);
  if (!resolved) throw Error(ErrorKind::transport, "unknown endpoint \"" + dst + "\"");
  dst_ = *resolved;
}

void SimChannel::send(const Bytes& bytes) {
  try {
    testbed_.send(src_, dst_, bytes);
  } catch (const Error& e) {
    throw Error(ErrorKind::transport, e.what());
  }
}

std::optional<Bytes> SimChannel::receive(std::int64_t deadline_ms) {
  while (true) {
    for (auto& d : testbed_.take_inbox(src_))
      if (d.src == dst_) pending_.push_back(std::move(d.payload));
    if (!pending_.empty()) {
      Bytes out = std::move(pending_.front());
      pending_.pop_front();
      return out;
    }
    if (testbed_.now_ms() >= deadline_ms) return std::nullopt;
    testbed_.tick();
  }
}

}  // namespace k4i::orchestrator
