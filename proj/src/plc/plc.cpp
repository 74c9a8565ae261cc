#include "k4i/plc/plc.hpp"

#include <set>

#include "k4i/error.hpp"

namespace k4i::plc {

std::string_view to_string(PlcRole role) { return role == PlcRole::master ? "master" : "slave"; }

std::vector<std::string> check_points(std::span<const PointSpec> points, const devices::DeviceBank& bank) {
  std::vector<std::string> problems;
  std::set<std::string, std::less<>> seen;
  for (const auto& p : points) {
    const std::string where = "point '" + p.name + "': ";
    if (!valid_point_name(p.name)) problems.push_back(where + "invalid name");
    if (!seen.insert(p.name).second) problems.push_back(where + "duplicate name");
    const auto binding = devices::parse_binding(p.binding);
    if (!binding) {
      problems.push_back(where + "malformed binding '" + p.binding + "'");
      continue;
    }
    const auto info = bank.field_info(*binding);
    if (!info) {
      problems.push_back(where + "binding '" + p.binding + "' does not resolve to a device field");
      continue;
    }
    if (info->kind != p.kind) {
      problems.push_back(where + (p.kind == SignalKind::digital ? "digital point bound to an analog field"
                                                                : "analog point bound to a digital field"));
    } else if (p.kind == SignalKind::analog && info->unit != p.unit) {
      problems.push_back(where + "unit " + std::string(devices::unit_name(p.unit)) + " does not match field unit " +
                         std::string(devices::unit_name(info->unit)));
    }
    if (p.direction == Direction::output && !info->actuator) {
      problems.push_back(where + "output bound to a sensor field");
    }
    if (p.direction == Direction::input && info->actuator) {
      problems.push_back(where + "input bound to an actuator field");
    }
  }
  return problems;
}

Plc::Plc(PlcSetup setup)
    : id_(std::move(setup.id)),
      role_(setup.role),
      model_label_(std::move(setup.model_label)),
      points_(std::move(setup.points)),
      program_(std::move(setup.program)),
      devices_(std::move(setup.devices)),
      scan_ms_(setup.scan_ms) {
  if (scan_ms_ <= 0) throw ValidationError(id_, "scan period must be positive");
  if (const auto problems = check_points(points_, devices_); !problems.empty()) {
    std::vector<Issue> issues;
    for (const auto& p : problems) issues.push_back({id_, p});
    throw ValidationError(std::move(issues));
  }
  map_ = bind_register_map(points_);
  store_ = DataStore(map_);
  image_ = IoImage(points_);
  timers_ = make_timers(program_);
  for (const auto& p : points_) {
    auto field = *devices::parse_binding(p.binding);
    const auto info = *devices_.field_info(field);
    fields_.push_back(std::move(field));
    registers_.push_back(*map_.find(p.name));
    stimulus_.push_back(info.stimulus ? 1 : 0);
  }
  // Initial image mirrors the devices, outputs included.
  for (std::size_t i = 0; i < points_.size(); ++i) image_.set(points_[i].name, devices_.read(fields_[i]));
  publish_outputs();
}

const PointSpec* Plc::find_point(std::string_view name) const {
  for (const auto& p : points_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

bool Plc::is_stimulus(std::string_view point) const {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].name == point) return stimulus_[i] != 0;
  }
  return false;
}

WriteOutcome Plc::set_stimulus(std::string_view point, const SignalValue& value) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].name != point) continue;
    if (!stimulus_[i]) return WriteOutcome::not_writable;
    if (value.kind() != points_[i].kind) return WriteOutcome::type_mismatch;
    devices_.write(fields_[i], value);
    return WriteOutcome::ok;
  }
  return WriteOutcome::unknown_point;
}

void Plc::latch_inputs() {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].direction == Direction::input) image_.set(points_[i].name, devices_.read(fields_[i]));
  }
}

void Plc::apply_pending_writes() {
  for (const auto& [table, address] : store_.take_pending()) {
    const auto* reg = map_.at(table, address);
    if (reg == nullptr) continue;
    const auto* spec = find_point(reg->point);
    if (table == Table::coils) {
      image_.set(reg->point, SignalValue::digital(store_.bit(table, address)));
    } else {
      image_.set(reg->point, SignalValue::analog(decode_analog(store_.word(table, address), reg->scale), spec->unit));
    }
  }
}

void Plc::publish_outputs() {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto& value = image_.at(points_[i].name);
    if (points_[i].direction == Direction::output) devices_.write(fields_[i], value);
    const auto& reg = registers_[i];
    if (value.is_digital()) {
      store_.set_bit(reg.table, reg.address, value.as_bool());
    } else {
      store_.set_word(reg.table, reg.address, encode_analog(value.as_real(), reg.scale));
    }
  }
}

void Plc::scan_cycle(std::int64_t dt_ms, std::int64_t now_ms) {
  latch_inputs();
  apply_pending_writes();
  execute_in_place(program_, image_, timers_, dt_ms);
  publish_outputs();
  image_.timestamp_ms = now_ms;
  ++cycles_;
}

}  // namespace k4i::plc
