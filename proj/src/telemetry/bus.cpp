#include "k4i/telemetry/bus.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "k4i/error.hpp"

namespace k4i::telemetry {

namespace {

std::vector<std::string_view> split_levels(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto slash = s.find('/', start);
    out.push_back(s.substr(start, slash == std::string_view::npos ? std::string_view::npos : slash - start));
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  return out;
}

}  // namespace

std::string point_topic(std::string_view panel, std::string_view plc, std::string_view point) {
  std::string t = "k4i/panel/";
  t += panel;
  t += "/plc/";
  t += plc;
  t += "/point/";
  t += point;
  return t;
}

std::string point_payload(std::int64_t ts_ms, const devices::SignalValue& value) {
  nlohmann::ordered_json j;
  j["ts"] = ts_ms;
  if (value.is_digital()) {
    j["value"] = value.as_bool();
  } else {
    j["value"] = value.as_real();
  }
  return j.dump();
}

void validate_pattern(std::string_view pattern) {
  if (pattern.empty()) throw Error(ErrorKind::validation, "empty topic pattern");
  const auto levels = split_levels(pattern);
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto level = levels[i];
    if (level.find_first_of("+#") == std::string_view::npos) continue;
    if (level.size() != 1) throw Error(ErrorKind::validation, "wildcard must occupy a whole level: " + std::string(pattern));
    if (level == "#" && i + 1 != levels.size()) {
      throw Error(ErrorKind::validation, "'#' must be the last level: " + std::string(pattern));
    }
  }
}

bool topic_matches(std::string_view pattern, std::string_view topic) {
  const auto p = split_levels(pattern);
  const auto t = split_levels(topic);
  std::size_t i = 0;
  for (; i < p.size(); ++i) {
    if (p[i] == "#") return true;
    if (i >= t.size()) return false;
    if (p[i] != "+" && p[i] != t[i]) return false;
  }
  return i == t.size();
}

std::optional<TelemetryMessage> Subscription::next(std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  if (!cv_.wait_for(lock, timeout, [&] { return !queue_.empty(); })) return std::nullopt;
  auto m = std::move(queue_.front());
  queue_.pop_front();
  return m;
}

std::vector<TelemetryMessage> Subscription::drain() {
  std::lock_guard lock(mutex_);
  std::vector<TelemetryMessage> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
  queue_.clear();
  return out;
}

std::size_t Subscription::pending() const {
  std::lock_guard lock(mutex_);
  return queue_.size();
}

void Subscription::push(TelemetryMessage message) {
  {
    std::lock_guard lock(mutex_);
    queue_.push_back(std::move(message));
  }
  cv_.notify_one();
}

void TopicBus::register_point(std::string_view panel, std::string_view plc, std::string_view point) {
  std::lock_guard lock(mutex_);
  points_.insert(point_topic(panel, plc, point));
}

bool TopicBus::known_point(std::string_view panel, std::string_view plc, std::string_view point) const {
  std::lock_guard lock(mutex_);
  return points_.count(point_topic(panel, plc, point)) != 0;
}

TelemetryMessage TopicBus::publish_point_update(std::string_view panel, std::string_view plc, std::string_view point,
                                                const devices::SignalValue& value, std::int64_t ts_ms) {
  TelemetryMessage m{point_topic(panel, plc, point), point_payload(ts_ms, value), true, ts_ms};
  std::lock_guard lock(mutex_);
  if (!points_.count(m.topic)) throw Error(ErrorKind::validation, "unknown point for topic " + m.topic);
  retained_[m.topic] = m;
  ++published_;
  for (const auto& sub : subscribers_) {
    if (topic_matches(sub->pattern(), m.topic)) {
      auto live = m;
      live.retained = false;
      sub->push(std::move(live));
    }
  }
  return m;
}

std::shared_ptr<Subscription> TopicBus::subscribe(std::string_view pattern) {
  validate_pattern(pattern);
  auto sub = std::make_shared<Subscription>(std::string(pattern));
  std::lock_guard lock(mutex_);
  for (const auto& [topic, message] : retained_) {
    if (topic_matches(pattern, topic)) sub->push(message);
  }
  subscribers_.push_back(sub);
  return sub;
}

void TopicBus::unsubscribe(const std::shared_ptr<Subscription>& subscription) {
  std::lock_guard lock(mutex_);
  std::erase(subscribers_, subscription);
}

std::map<std::string, TelemetryMessage> TopicBus::retained() const {
  std::lock_guard lock(mutex_);
  return retained_;
}

void TopicBus::restore_retained(std::map<std::string, TelemetryMessage> retained) {
  std::lock_guard lock(mutex_);
  retained_ = std::move(retained);
}

std::uint64_t TopicBus::published() const {
  std::lock_guard lock(mutex_);
  return published_;
}

}  // namespace k4i::telemetry
