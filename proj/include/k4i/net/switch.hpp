#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "k4i/hex.hpp"

namespace k4i::net {

enum class EndpointKind { plc, controller, attacker, hmi };

std::string_view to_string(EndpointKind kind);

struct Endpoint {
  std::string id;
  EndpointKind kind = EndpointKind::plc;

  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

/// Latency is uniform in [latency_min_ms, latency_max_ms]; equal bounds give a
/// fixed delay. Loss and jitter draw from a generator seeded with seed.
struct LinkPolicy {
  double latency_min_ms = 0.0;
  double latency_max_ms = 0.0;
  double drop_probability = 0.0;
  std::uint64_t seed = 0;

  [[nodiscard]] bool fixed_latency() const noexcept { return latency_min_ms == latency_max_ms; }
};

/// Throws a validation Error for negative latency, inverted bounds or a
/// probability outside [0, 1].
void validate(const LinkPolicy& policy);

struct CaptureRecord {
  std::uint64_t seq = 0;
  std::int64_t ts_ms = 0;
  std::string src;
  std::string dst;
  Bytes payload;
  bool dropped = false;

  friend bool operator==(const CaptureRecord&, const CaptureRecord&) = default;
};

/// One line of the JSON Lines capture export.
std::string to_jsonl(const CaptureRecord& record);
/// Parses one export line back; seq is not exported and comes back as 0.
/// Throws a validation Error on a malformed line.
CaptureRecord capture_from_jsonl(std::string_view line);
std::vector<CaptureRecord> parse_capture(std::string_view jsonl);

struct Delivery {
  std::uint64_t seq = 0;
  double ts_ms = 0.0;  // scheduled arrival
  std::string src;
  std::string dst;
  Bytes payload;
};

class PortHandle {
 public:
  PortHandle() = default;
  [[nodiscard]] const std::string& id() const noexcept { return id_; }
  friend bool operator==(const PortHandle&, const PortHandle&) = default;

 private:
  friend class Switch;
  explicit PortHandle(std::string id) : id_(std::move(id)) {}
  std::string id_;
};

/// The single switch every endpoint hangs off (star topology). Runs on the
/// simulated clock: sends are stamped with now(), deliveries happen inside
/// advance_to().
class Switch {
 public:
  explicit Switch(LinkPolicy policy = {});

  /// Throws a conflict Error when the id is taken.
  PortHandle attach(Endpoint endpoint);
  void detach(std::string_view id);
  [[nodiscard]] bool attached(std::string_view id) const;
  [[nodiscard]] std::optional<Endpoint> endpoint(std::string_view id) const;
  [[nodiscard]] const std::vector<Endpoint>& topology() const noexcept { return endpoints_; }

  /// Throws a routing Error for an unknown destination or a detached source.
  void send_frame(const PortHandle& from, std::string_view to, Bytes payload);
  /// Same as send_frame but only for attacker ports. Nothing on the wire tells
  /// the victim the frame was injected.
  void inject(const PortHandle& attacker, std::string_view to, Bytes payload);

  using DeliveryHandler = std::function<void(const Delivery&)>;

  /// Moves the clock to now_ms and delivers every frame due by then, in
  /// (arrival, send order). Frames sent from inside the handler that are due
  /// by now_ms are delivered in the same call.
  void advance_to(std::int64_t now_ms, const DeliveryHandler& handler);

  [[nodiscard]] std::int64_t now() const noexcept { return now_ms_; }
  [[nodiscard]] std::size_t in_flight() const noexcept { return queue_.size(); }

  [[nodiscard]] const std::vector<CaptureRecord>& capture_log() const noexcept { return capture_; }
  /// Records with src or dst equal to the filter, or all records.
  [[nodiscard]] std::vector<CaptureRecord> capture(std::optional<std::string_view> filter = std::nullopt) const;
  [[nodiscard]] std::string export_capture(std::optional<std::string_view> filter = std::nullopt) const;

  [[nodiscard]] const LinkPolicy& policy() const noexcept { return policy_; }

 private:
  struct Pending {
    double due_ms;
    std::uint64_t seq;
    Delivery delivery;
  };

  double next_uniform();
  void enqueue(const std::string& from, std::string_view to, Bytes payload);

  LinkPolicy policy_;
  std::mt19937_64 rng_;
  std::vector<Endpoint> endpoints_;
  std::vector<Pending> queue_;  // min-heap on (due_ms, seq)
  std::vector<CaptureRecord> capture_;
  std::uint64_t next_seq_ = 0;
  std::int64_t now_ms_ = 0;
};

}  // namespace k4i::net
