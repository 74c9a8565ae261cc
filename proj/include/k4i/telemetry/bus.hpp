#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "k4i/devices/signal.hpp"

namespace k4i::telemetry {

struct TelemetryMessage {
  std::string topic;
  std::string payload;  // {"ts": <ms>, "value": <bool|number>}
  bool retained = false;
  std::int64_t ts_ms = 0;

  friend bool operator==(const TelemetryMessage&, const TelemetryMessage&) = default;
};

/// k4i/panel/<panel>/plc/<plc>/point/<point>
std::string point_topic(std::string_view panel, std::string_view plc, std::string_view point);
std::string point_payload(std::int64_t ts_ms, const devices::SignalValue& value);

/// Throws a validation Error for an empty pattern, a '+' or '#' sharing a level
/// with other characters, or a '#' that is not the last level.
void validate_pattern(std::string_view pattern);
bool topic_matches(std::string_view pattern, std::string_view topic);

/// Per-subscriber FIFO. Consumers pull from their own thread.
class Subscription {
 public:
  explicit Subscription(std::string pattern) : pattern_(std::move(pattern)) {}

  [[nodiscard]] const std::string& pattern() const noexcept { return pattern_; }

  /// Waits up to timeout for the next message.
  std::optional<TelemetryMessage> next(std::chrono::milliseconds timeout = std::chrono::milliseconds(0));
  std::vector<TelemetryMessage> drain();
  [[nodiscard]] std::size_t pending() const;

  void push(TelemetryMessage message);

 private:
  std::string pattern_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<TelemetryMessage> queue_;
};

/// In-process topic bus with MQTT-style retained messages and wildcards.
class TopicBus {
 public:
  void register_point(std::string_view panel, std::string_view plc, std::string_view point);
  [[nodiscard]] bool known_point(std::string_view panel, std::string_view plc, std::string_view point) const;

  /// Retains and fans out an update. Throws a validation Error for an
  /// unregistered point.
  TelemetryMessage publish_point_update(std::string_view panel, std::string_view plc, std::string_view point,
                                        const devices::SignalValue& value, std::int64_t ts_ms);

  /// Queues every retained match (in topic order) before returning.
  std::shared_ptr<Subscription> subscribe(std::string_view pattern);
  void unsubscribe(const std::shared_ptr<Subscription>& subscription);

  [[nodiscard]] std::map<std::string, TelemetryMessage> retained() const;
  void restore_retained(std::map<std::string, TelemetryMessage> retained);
  [[nodiscard]] std::uint64_t published() const;

 private:
  mutable std::mutex mutex_;
  std::set<std::string, std::less<>> points_;
  std::map<std::string, TelemetryMessage> retained_;
  std::vector<std::shared_ptr<Subscription>> subscribers_;
  std::uint64_t published_ = 0;
};

}  // namespace k4i::telemetry
