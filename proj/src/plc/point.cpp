#include "k4i/plc/point.hpp"

#include "k4i/error.hpp"

namespace k4i::plc {

std::string_view to_string(Direction d) { return d == Direction::input ? "input" : "output"; }

bool valid_point_name(std::string_view name) {
  if (name.empty() || name.size() > 32) return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok) return false;
  }
  return true;
}

SignalValue initial_value(const PointSpec& spec) {
  return spec.kind == SignalKind::digital ? SignalValue::digital(false) : SignalValue::analog(0.0, spec.unit);
}

IoImage::IoImage(std::span<const PointSpec> points) {
  for (const auto& p : points) values_.emplace(p.name, initial_value(p));
}

const SignalValue& IoImage::at(std::string_view name) const {
  const auto it = values_.find(name);
  if (it == values_.end()) throw Error(ErrorKind::not_found, "unknown point '" + std::string(name) + "'");
  return it->second;
}

void IoImage::set(std::string_view name, const SignalValue& value) {
  const auto it = values_.find(name);
  if (it == values_.end()) throw Error(ErrorKind::not_found, "unknown point '" + std::string(name) + "'");
  it->second.assign(value);
}

}  // namespace k4i::plc
