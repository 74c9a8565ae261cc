#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "k4i/devices/bank.hpp"
#include "k4i/plc/data_store.hpp"
#include "k4i/plc/point.hpp"
#include "k4i/plc/program.hpp"
#include "k4i/plc/register_map.hpp"

namespace k4i::plc {

enum class PlcRole { master, slave };

std::string_view to_string(PlcRole role);

struct PlcSetup {
  std::string id;
  PlcRole role = PlcRole::slave;
  std::string model_label;
  std::vector<PointSpec> points;
  ControlProgram program;
  devices::DeviceBank devices;
  std::int64_t scan_ms = 50;
};

/// Checks every point against the device bank (binding resolves, kind, unit and
/// direction agree) and names are unique. Returns the problems found.
std::vector<std::string> check_points(std::span<const PointSpec> points, const devices::DeviceBank& bank);

enum class WriteOutcome { ok, unknown_point, not_writable, type_mismatch };

/// A virtual PLC. Owns its field devices, I/O image, timers and Modbus tables.
class Plc {
 public:
  /// Throws a ValidationError when the points do not fit the devices.
  explicit Plc(PlcSetup setup);

  /// Latch inputs, apply pending network writes, run the program, drive outputs.
  void scan_cycle(std::int64_t dt_ms, std::int64_t now_ms);

  /// Sets a stimulus device (button, key switch, motion detector) through its point.
  WriteOutcome set_stimulus(std::string_view point, const SignalValue& value);
  [[nodiscard]] bool is_stimulus(std::string_view point) const;

  void step_physics(double dt_s) { devices_.step_physics(dt_s); }

  [[nodiscard]] const std::string& id() const noexcept { return id_; }
  [[nodiscard]] PlcRole role() const noexcept { return role_; }
  [[nodiscard]] const std::string& model_label() const noexcept { return model_label_; }
  [[nodiscard]] std::int64_t scan_ms() const noexcept { return scan_ms_; }
  [[nodiscard]] std::uint64_t cycles() const noexcept { return cycles_; }
  [[nodiscard]] const std::vector<PointSpec>& points() const noexcept { return points_; }
  [[nodiscard]] const PointSpec* find_point(std::string_view name) const;
  [[nodiscard]] const ControlProgram& program() const noexcept { return program_; }
  [[nodiscard]] const IoImage& image() const noexcept { return image_; }
  [[nodiscard]] const TimerBank& timers() const noexcept { return timers_; }
  [[nodiscard]] const RegisterMap& register_map() const noexcept { return map_; }
  [[nodiscard]] const DataStore& store() const noexcept { return store_; }
  DataStore& store() noexcept { return store_; }
  [[nodiscard]] const devices::DeviceBank& devices() const noexcept { return devices_; }
  devices::DeviceBank& devices() noexcept { return devices_; }

 private:
  void latch_inputs();
  void apply_pending_writes();
  void publish_outputs();

  std::string id_;
  PlcRole role_;
  std::string model_label_;
  std::vector<PointSpec> points_;
  ControlProgram program_;
  devices::DeviceBank devices_;
  std::int64_t scan_ms_;
  RegisterMap map_;
  DataStore store_;
  IoImage image_;
  TimerBank timers_;
  std::uint64_t cycles_ = 0;
  // Parallel to points_.
  std::vector<devices::DeviceField> fields_;
  std::vector<RegisterAssignment> registers_;
  std::vector<char> stimulus_;
};

}  // namespace k4i::plc
