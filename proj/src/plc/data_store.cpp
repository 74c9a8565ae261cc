#include "k4i/plc/data_store.hpp"

#include "k4i/digest.hpp"
#include "k4i/error.hpp"

namespace k4i::plc {

DataStore::DataStore(const RegisterMap& map)
    : coils_(map.count(Table::coils), 0),
      discrete_inputs_(map.count(Table::discrete_inputs), 0),
      holding_(map.count(Table::holding_registers), 0),
      input_(map.count(Table::input_registers), 0) {}

std::size_t DataStore::size(Table table) const noexcept {
  switch (table) {
    case Table::coils: return coils_.size();
    case Table::discrete_inputs: return discrete_inputs_.size();
    case Table::holding_registers: return holding_.size();
    case Table::input_registers: return input_.size();
  }
  return 0;
}

bool DataStore::mapped(Table table, std::uint32_t address, std::uint32_t count) const noexcept {
  return count > 0 && static_cast<std::uint64_t>(address) + count <= size(table);
}

const std::vector<std::uint8_t>& DataStore::bits(Table table) const {
  if (table == Table::coils) return coils_;
  if (table == Table::discrete_inputs) return discrete_inputs_;
  throw Error(ErrorKind::validation, "not a bit table");
}

const std::vector<std::uint16_t>& DataStore::words(Table table) const {
  if (table == Table::holding_registers) return holding_;
  if (table == Table::input_registers) return input_;
  throw Error(ErrorKind::validation, "not a register table");
}

bool DataStore::bit(Table table, std::uint16_t address) const { return bits(table).at(address) != 0; }

std::uint16_t DataStore::word(Table table, std::uint16_t address) const { return words(table).at(address); }

void DataStore::set_bit(Table table, std::uint16_t address, bool value) {
  auto& target = table == Table::coils ? coils_ : discrete_inputs_;
  if (table != Table::coils && table != Table::discrete_inputs) throw Error(ErrorKind::validation, "not a bit table");
  target.at(address) = value ? 1 : 0;
}

void DataStore::set_word(Table table, std::uint16_t address, std::uint16_t value) {
  auto& target = table == Table::holding_registers ? holding_ : input_;
  if (table != Table::holding_registers && table != Table::input_registers) {
    throw Error(ErrorKind::validation, "not a register table");
  }
  target.at(address) = value;
}

void DataStore::remote_write_bit(std::uint16_t address, bool value) {
  coils_.at(address) = value ? 1 : 0;
  pending_.emplace_back(Table::coils, address);
}

void DataStore::remote_write_word(std::uint16_t address, std::uint16_t value) {
  holding_.at(address) = value;
  pending_.emplace_back(Table::holding_registers, address);
}

std::vector<std::pair<Table, std::uint16_t>> DataStore::take_pending() {
  std::vector<std::pair<Table, std::uint16_t>> out;
  out.swap(pending_);
  return out;
}

std::string DataStore::digest() const {
  Fnv1a h;
  h.update(coils_);
  h.update_u64(0xC0);
  h.update(discrete_inputs_);
  h.update_u64(0xD1);
  for (auto w : holding_) h.update_u64(w);
  h.update_u64(0x4E);
  for (auto w : input_) h.update_u64(w);
  h.update_u64(0x1E);
  for (const auto& [t, a] : pending_) h.update_u64((static_cast<std::uint64_t>(t) << 16) | a);
  return h.hex();
}

}  // namespace k4i::plc
