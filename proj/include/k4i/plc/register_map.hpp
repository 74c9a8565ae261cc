#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "k4i/plc/point.hpp"

namespace k4i::plc {

enum class Table { coils, discrete_inputs, holding_registers, input_registers };

std::string_view to_string(Table t);

struct RegisterAssignment {
  std::string point;
  Table table = Table::coils;
  std::uint16_t address = 0;
  double scale = 1.0;  // register = round(value * scale); 1 for digital points

  friend bool operator==(const RegisterAssignment&, const RegisterAssignment&) = default;
};

/// Default fixed-point scale for analog registers (centidegrees, centi-lux).
inline constexpr double analog_scale = 100.0;

/// Point-to-register assignment for one PLC.
class RegisterMap {
 public:
  RegisterMap() = default;
  explicit RegisterMap(std::vector<RegisterAssignment> assignments);

  [[nodiscard]] const std::vector<RegisterAssignment>& assignments() const noexcept { return assignments_; }
  [[nodiscard]] const RegisterAssignment* find(std::string_view point) const;
  [[nodiscard]] const RegisterAssignment* at(Table table, std::uint16_t address) const;
  [[nodiscard]] std::size_t count(Table table) const;

  [[nodiscard]] nlohmann::json to_json() const;

  friend bool operator==(const RegisterMap&, const RegisterMap&) = default;

 private:
  std::vector<RegisterAssignment> assignments_;  // ordered by (table, address)
};

/// Table that a point of this direction and kind lands in.
Table table_for(const PointSpec& spec);

/// Scale for a point: 1 for digital and step counts, analog_scale otherwise.
double scale_for(const PointSpec& spec);

/// Points sorted by name, addresses allocated from 0 within each table.
/// Throws a capacity Error when a table would exceed 65536 entries.
RegisterMap bind_register_map(std::span<const PointSpec> points);

/// Fixed-point conversion, saturating at the 16-bit unsigned range.
std::uint16_t encode_analog(double value, double scale);
double decode_analog(std::uint16_t raw, double scale);

}  // namespace k4i::plc
