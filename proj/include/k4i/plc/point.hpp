#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>

#include "k4i/devices/signal.hpp"

namespace k4i::plc {

using devices::SignalKind;
using devices::SignalValue;
using devices::Unit;

enum class Direction { input, output };

std::string_view to_string(Direction d);

struct PointSpec {
  std::string name;
  Direction direction = Direction::input;
  SignalKind kind = SignalKind::digital;
  Unit unit = Unit::none;
  std::string binding;  // "device.field"

  friend bool operator==(const PointSpec&, const PointSpec&) = default;
};

/// Lowercase [a-z0-9_], 1..32 chars.
bool valid_point_name(std::string_view name);

/// Zero value of the point's variant: digital false or analog 0 in the point's unit.
SignalValue initial_value(const PointSpec& spec);

/// The PLC's input/output image. Holds exactly the declared points.
class IoImage {
 public:
  using Map = std::map<std::string, SignalValue, std::less<>>;

  IoImage() = default;
  explicit IoImage(std::span<const PointSpec> points);

  [[nodiscard]] bool contains(std::string_view name) const { return values_.find(name) != values_.end(); }
  [[nodiscard]] const SignalValue& at(std::string_view name) const;

  /// Keeps the point's variant; throws if the name is unknown or the variant differs.
  void set(std::string_view name, const SignalValue& value);

  [[nodiscard]] const Map& values() const noexcept { return values_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

  std::int64_t timestamp_ms = 0;

  friend bool operator==(const IoImage&, const IoImage&) = default;

 private:
  Map values_;
};

}  // namespace k4i::plc
