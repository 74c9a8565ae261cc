#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "k4i/plc/register_map.hpp"

namespace k4i::plc {

/// The four Modbus tables of one PLC. An address is mapped iff it is below the
/// table size, since the register map allocates densely from 0.
///
/// Writes that arrive over the network are recorded as pending so the next
/// scan can apply them to the I/O image.
class DataStore {
 public:
  DataStore() = default;
  explicit DataStore(const RegisterMap& map);

  [[nodiscard]] std::size_t size(Table table) const noexcept;
  [[nodiscard]] bool mapped(Table table, std::uint32_t address, std::uint32_t count = 1) const noexcept;

  [[nodiscard]] bool bit(Table table, std::uint16_t address) const;
  [[nodiscard]] std::uint16_t word(Table table, std::uint16_t address) const;

  /// Local (scan) writes.
  void set_bit(Table table, std::uint16_t address, bool value);
  void set_word(Table table, std::uint16_t address, std::uint16_t value);

  /// Network writes to coils and holding registers; remembered until taken.
  void remote_write_bit(std::uint16_t address, bool value);
  void remote_write_word(std::uint16_t address, std::uint16_t value);
  std::vector<std::pair<Table, std::uint16_t>> take_pending();

  [[nodiscard]] std::string digest() const;

  friend bool operator==(const DataStore&, const DataStore&) = default;

 private:
  [[nodiscard]] const std::vector<std::uint8_t>& bits(Table table) const;
  [[nodiscard]] const std::vector<std::uint16_t>& words(Table table) const;

  std::vector<std::uint8_t> coils_;
  std::vector<std::uint8_t> discrete_inputs_;
  std::vector<std::uint16_t> holding_;
  std::vector<std::uint16_t> input_;
  std::vector<std::pair<Table, std::uint16_t>> pending_;
};

}  // namespace k4i::plc
