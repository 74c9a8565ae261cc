#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace k4i::devices {

enum class Unit { none, celsius, lux, steps, volts };

std::string_view unit_symbol(Unit unit);
std::string_view unit_name(Unit unit);
std::optional<Unit> parse_unit(std::string_view text);

enum class SignalKind { digital, analog };

/// Value of one I/O point. Analog values are always finite; the digital/analog
/// variant of a value is fixed once constructed.
class SignalValue {
 public:
  SignalValue() = default;  // digital false

  static SignalValue digital(bool on) { return SignalValue(on); }
  static SignalValue analog(double value, Unit unit);

  [[nodiscard]] SignalKind kind() const noexcept {
    return std::holds_alternative<bool>(value_) ? SignalKind::digital : SignalKind::analog;
  }
  [[nodiscard]] bool is_digital() const noexcept { return kind() == SignalKind::digital; }

  /// Throws a validation Error when called on the other variant.
  [[nodiscard]] bool as_bool() const;
  [[nodiscard]] double as_real() const;
  [[nodiscard]] Unit unit() const noexcept;

  /// Replaces the payload while keeping the variant (and unit).
  void assign(const SignalValue& other);
  void set(bool on);
  void set(double value);

  friend bool operator==(const SignalValue&, const SignalValue&) = default;

 private:
  struct Analog {
    double value = 0.0;
    Unit unit = Unit::none;
    friend bool operator==(const Analog&, const Analog&) = default;
  };

  explicit SignalValue(bool on) : value_(on) {}
  explicit SignalValue(Analog a) : value_(a) {}

  std::variant<bool, Analog> value_{false};
};

/// "true"/"false" for digital, two decimals plus unit for analog ("25.00 °C").
std::string format_signal(const SignalValue& value);

}  // namespace k4i::devices
