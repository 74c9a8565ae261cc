#include "k4i/plc/register_map.hpp"

#include <algorithm>
#include <cmath>

#include "k4i/error.hpp"

namespace k4i::plc {

std::string_view to_string(Table t) {
  switch (t) {
    case Table::coils: return "coils";
    case Table::discrete_inputs: return "discrete_inputs";
    case Table::holding_registers: return "holding_registers";
    case Table::input_registers: return "input_registers";
  }
  return "coils";
}

RegisterMap::RegisterMap(std::vector<RegisterAssignment> assignments) : assignments_(std::move(assignments)) {
  std::sort(assignments_.begin(), assignments_.end(), [](const auto& a, const auto& b) {
    return std::pair(a.table, a.address) < std::pair(b.table, b.address);
  });
  for (std::size_t i = 1; i < assignments_.size(); ++i) {
    if (assignments_[i].table == assignments_[i - 1].table && assignments_[i].address == assignments_[i - 1].address) {
      throw Error(ErrorKind::conflict, "points '" + assignments_[i - 1].point + "' and '" + assignments_[i].point +
                                           "' share a register");
    }
  }
}

const RegisterAssignment* RegisterMap::find(std::string_view point) const {
  for (const auto& a : assignments_) {
    if (a.point == point) return &a;
  }
  return nullptr;
}

const RegisterAssignment* RegisterMap::at(Table table, std::uint16_t address) const {
  const auto it = std::lower_bound(assignments_.begin(), assignments_.end(), std::pair(table, address),
                                   [](const RegisterAssignment& a, const std::pair<Table, std::uint16_t>& key) {
                                     return std::pair(a.table, a.address) < key;
                                   });
  if (it == assignments_.end() || it->table != table || it->address != address) return nullptr;
  return &*it;
}

std::size_t RegisterMap::count(Table table) const {
  return static_cast<std::size_t>(
      std::count_if(assignments_.begin(), assignments_.end(), [&](const auto& a) { return a.table == table; }));
}

nlohmann::json RegisterMap::to_json() const {
  auto rows = nlohmann::json::array();
  for (const auto& a : assignments_) {
    rows.push_back({{"point", a.point}, {"table", to_string(a.table)}, {"address", a.address}, {"scale", a.scale}});
  }
  return rows;
}

Table table_for(const PointSpec& spec) {
  if (spec.kind == SignalKind::digital) {
    return spec.direction == Direction::output ? Table::coils : Table::discrete_inputs;
  }
  return spec.direction == Direction::output ? Table::holding_registers : Table::input_registers;
}

double scale_for(const PointSpec& spec) {
  if (spec.kind == SignalKind::digital || spec.unit == Unit::steps) return 1.0;
  return analog_scale;
}

RegisterMap bind_register_map(std::span<const PointSpec> points) {
  std::vector<const PointSpec*> sorted;
  sorted.reserve(points.size());
  for (const auto& p : points) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) { return a->name < b->name; });

  std::size_t next[4] = {0, 0, 0, 0};
  std::vector<RegisterAssignment> out;
  out.reserve(points.size());
  for (const auto* p : sorted) {
    const auto table = table_for(*p);
    auto& slot = next[static_cast<int>(table)];
    if (slot > 0xFFFF) {
      throw Error(ErrorKind::capacity, std::string("more than 65536 points in table ") + std::string(to_string(table)));
    }
    out.push_back({p->name, table, static_cast<std::uint16_t>(slot), scale_for(*p)});
    ++slot;
  }
  return RegisterMap(std::move(out));
}

std::uint16_t encode_analog(double value, double scale) {
  const double scaled = std::round(value * scale);
  if (!(scaled > 0.0)) return 0;
  if (scaled >= 65535.0) return 65535;
  return static_cast<std::uint16_t>(scaled);
}

double decode_analog(std::uint16_t raw, double scale) { return static_cast<double>(raw) / scale; }

}  // namespace k4i::plc
