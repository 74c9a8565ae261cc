#include "k4i/net/switch.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "k4i/error.hpp"

namespace k4i::net {

std::string_view to_string(EndpointKind kind) {
  switch (kind) {
    case EndpointKind::plc: return "plc";
    case EndpointKind::controller: return "controller";
    case EndpointKind::attacker: return "attacker";
    case EndpointKind::hmi: return "hmi";
  }
  return "plc";
}

void validate(const LinkPolicy& p) {
  if (!std::isfinite(p.latency_min_ms) || !std::isfinite(p.latency_max_ms) || p.latency_min_ms < 0.0 ||
      p.latency_max_ms < p.latency_min_ms) {
    throw Error(ErrorKind::validation, "latency must be non-negative with min <= max");
  }
  if (!(p.drop_probability >= 0.0 && p.drop_probability <= 1.0)) {
    throw Error(ErrorKind::validation, "drop probability must be in [0, 1]");
  }
}

std::string to_jsonl(const CaptureRecord& r) {
  // Field order is fixed so exports diff cleanly.
  nlohmann::ordered_json j;
  j["ts_ms"] = r.ts_ms;
  j["src"] = r.src;
  j["dst"] = r.dst;
  j["dropped"] = r.dropped;
  j["payload_hex"] = to_hex(r.payload);
  return j.dump();
}

CaptureRecord capture_from_jsonl(std::string_view line) {
  const auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorKind::validation, "capture line is not a JSON object");
  CaptureRecord r;
  try {
    r.ts_ms = j.at("ts_ms").get<std::int64_t>();
    r.src = j.at("src").get<std::string>();
    r.dst = j.at("dst").get<std::string>();
    r.dropped = j.value("dropped", false);
    r.payload = from_hex(j.at("payload_hex").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::validation, std::string("capture line: ") + e.what());
  }
  return r;
}

std::vector<CaptureRecord> parse_capture(std::string_view jsonl) {
  std::vector<CaptureRecord> out;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    auto nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    const auto line = jsonl.substr(pos, nl - pos);
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) out.push_back(capture_from_jsonl(line));
    pos = nl + 1;
  }
  return out;
}

namespace {

bool later(const auto& a, const auto& b) {
  return std::pair(a.due_ms, a.seq) > std::pair(b.due_ms, b.seq);
}

}  // namespace

Switch::Switch(LinkPolicy policy) : policy_(policy), rng_(policy.seed) { validate(policy_); }

PortHandle Switch::attach(Endpoint endpoint) {
  if (attached(endpoint.id)) throw Error(ErrorKind::conflict, "endpoint '" + endpoint.id + "' already attached");
  if (endpoint.id.empty()) throw Error(ErrorKind::validation, "endpoint id must not be empty");
  endpoints_.push_back(endpoint);
  return PortHandle(endpoint.id);
}

void Switch::detach(std::string_view id) {
  std::erase_if(endpoints_, [&](const Endpoint& e) { return e.id == id; });
}

bool Switch::attached(std::string_view id) const {
  return std::any_of(endpoints_.begin(), endpoints_.end(), [&](const Endpoint& e) { return e.id == id; });
}

std::optional<Endpoint> Switch::endpoint(std::string_view id) const {
  for (const auto& e : endpoints_) {
    if (e.id == id) return e;
  }
  return std::nullopt;
}

double Switch::next_uniform() {
  // Top 53 bits, so the sequence does not depend on the standard library's distributions.
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

void Switch::enqueue(const std::string& from, std::string_view to, Bytes payload) {
  if (!attached(from)) throw Error(ErrorKind::routing, "source '" + from + "' is not attached");
  if (!attached(to)) throw Error(ErrorKind::routing, "no route to '" + std::string(to) + "'");

  const auto seq = next_seq_++;
  const bool dropped = policy_.drop_probability > 0.0 && next_uniform() < policy_.drop_probability;
  double latency = policy_.latency_min_ms;
  if (!policy_.fixed_latency()) latency += next_uniform() * (policy_.latency_max_ms - policy_.latency_min_ms);

  capture_.push_back({seq, now_ms_, from, std::string(to), payload, dropped});
  if (dropped) return;

  const double due = static_cast<double>(now_ms_) + latency;
  queue_.push_back({due, seq, Delivery{seq, due, from, std::string(to), std::move(payload)}});
  std::push_heap(queue_.begin(), queue_.end(), [](const Pending& a, const Pending& b) { return later(a, b); });
}

void Switch::send_frame(const PortHandle& from, std::string_view to, Bytes payload) {
  enqueue(from.id(), to, std::move(payload));
}

void Switch::inject(const PortHandle& attacker, std::string_view to, Bytes payload) {
  const auto e = endpoint(attacker.id());
  if (!e || e->kind != EndpointKind::attacker) {
    throw Error(ErrorKind::routing, "'" + attacker.id() + "' is not an attacker port");
  }
  enqueue(attacker.id(), to, std::move(payload));
}

void Switch::advance_to(std::int64_t now_ms, const DeliveryHandler& handler) {
  now_ms_ = std::max(now_ms_, now_ms);
  const auto cmp = [](const Pending& a, const Pending& b) { return later(a, b); };
  while (!queue_.empty() && queue_.front().due_ms <= static_cast<double>(now_ms_)) {
    std::pop_heap(queue_.begin(), queue_.end(), cmp);
    Pending next = std::move(queue_.back());
    queue_.pop_back();
    // Frames to an endpoint that detached while they were in flight vanish.
    if (!attached(next.delivery.dst)) continue;
    if (handler) handler(next.delivery);
  }
}

std::vector<CaptureRecord> Switch::capture(std::optional<std::string_view> filter) const {
  if (!filter) return capture_;
  std::vector<CaptureRecord> out;
  for (const auto& r : capture_) {
    if (r.src == *filter || r.dst == *filter) out.push_back(r);
  }
  return out;
}

std::string Switch::export_capture(std::optional<std::string_view> filter) const {
  std::string out;
  for (const auto& r : capture(filter)) {
    out += to_jsonl(r);
    out += '\n';
  }
  return out;
}

}  // namespace k4i::net
