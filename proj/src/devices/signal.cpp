#include "k4i/devices/signal.hpp"

#include <cmath>
#include <cstdio>

#include "k4i/error.hpp"

namespace k4i::devices {

std::string_view unit_symbol(Unit unit) {
  switch (unit) {
    case Unit::none: return "";
    case Unit::celsius: return "°C";
    case Unit::lux: return "lux";
    case Unit::steps: return "steps";
    case Unit::volts: return "V";
  }
  return "";
}

std::string_view unit_name(Unit unit) {
  switch (unit) {
    case Unit::none: return "none";
    case Unit::celsius: return "celsius";
    case Unit::lux: return "lux";
    case Unit::steps: return "steps";
    case Unit::volts: return "volts";
  }
  return "none";
}

std::optional<Unit> parse_unit(std::string_view text) {
  if (text == "none" || text.empty()) return Unit::none;
  if (text == "celsius" || text == "C" || text == "°C") return Unit::celsius;
  if (text == "lux") return Unit::lux;
  if (text == "steps") return Unit::steps;
  if (text == "volts" || text == "V") return Unit::volts;
  return std::nullopt;
}

SignalValue SignalValue::analog(double value, Unit unit) {
  if (!std::isfinite(value)) throw Error(ErrorKind::validation, "analog value must be finite");
  return SignalValue(Analog{value, unit});
}

bool SignalValue::as_bool() const {
  if (const auto* b = std::get_if<bool>(&value_)) return *b;
  throw Error(ErrorKind::validation, "analog signal read as digital");
}

double SignalValue::as_real() const {
  if (const auto* a = std::get_if<Analog>(&value_)) return a->value;
  throw Error(ErrorKind::validation, "digital signal read as analog");
}

Unit SignalValue::unit() const noexcept {
  if (const auto* a = std::get_if<Analog>(&value_)) return a->unit;
  return Unit::none;
}

void SignalValue::assign(const SignalValue& other) {
  if (other.kind() == SignalKind::digital) {
    set(other.as_bool());
  } else {
    set(other.as_real());
  }
}

void SignalValue::set(bool on) {
  auto* b = std::get_if<bool>(&value_);
  if (b == nullptr) throw Error(ErrorKind::validation, "cannot store a digital value in an analog point");
  *b = on;
}

void SignalValue::set(double value) {
  auto* a = std::get_if<Analog>(&value_);
  if (a == nullptr) throw Error(ErrorKind::validation, "cannot store an analog value in a digital point");
  if (!std::isfinite(value)) throw Error(ErrorKind::validation, "analog value must be finite");
  a->value = value;
}

std::string format_signal(const SignalValue& value) {
  if (value.is_digital()) return value.as_bool() ? "true" : "false";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", value.as_real());
  std::string out = buf;
  const auto symbol = unit_symbol(value.unit());
  if (!symbol.empty()) {
    out += ' ';
    out += symbol;
  }
  return out;
}

}  // namespace k4i::devices
