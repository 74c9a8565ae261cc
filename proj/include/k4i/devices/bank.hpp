#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "k4i/devices/display.hpp"
#include "k4i/devices/motor.hpp"
#include "k4i/devices/signal.hpp"
#include "k4i/devices/thermal.hpp"

namespace k4i::devices {

enum class StimulusKind { button, key_switch, motion };

struct Led {
  bool on = false;
};

/// Buttons, key switch and motion detectors have no dynamics: they hold
/// whatever the HMI, CLI or scenario timeline last set.
struct Stimulus {
  StimulusKind kind = StimulusKind::button;
  bool active = false;
};

struct Heater {
  double rated_power_w = 10.0;
  bool on = false;
  ThermalState thermal;
};

struct Thermometer {
  std::string heater;  // id of the heater whose body it measures
  double resolution_c = 0.0625;
};

struct LightSensor {
  double ambient_lux = 100.0;
  double per_led_lux = 20.0;
  std::vector<std::string> leds;
};

struct SevenSegment {
  double value = 0.0;
  SegmentPair segments{0x3F, 0x3F};
};

struct EPaper {
  std::string text;
};

struct Motor {
  MotorState state;
};

using DeviceModel = std::variant<Led, Stimulus, Heater, Thermometer, LightSensor, SevenSegment, EPaper, Motor>;

struct Device {
  std::string id;
  DeviceModel model;
};

std::string_view device_type_name(const DeviceModel& model);

/// Builds a device from its scenario type name and parameter object.
/// Throws a validation Error on an unknown type or a bad parameter.
DeviceModel make_device(std::string_view type, const nlohmann::json& params);

/// What a point can bind to inside a device.
struct FieldInfo {
  SignalKind kind = SignalKind::digital;
  Unit unit = Unit::none;
  bool actuator = false;  // driven by the program (output points)
  bool stimulus = false;  // settable from outside (HMI/CLI/scenario)
};

struct DeviceField {
  std::string device;
  std::string field;
};

/// "device.field", or just "device" for the device's primary field.
std::optional<DeviceField> parse_binding(std::string_view binding);

/// Points a device contributes when a PLC declares no explicit point list.
struct DefaultPoint {
  std::string name;
  std::string field;
};
std::vector<DefaultPoint> default_points(const Device& device);

/// Owns every field device attached to one PLC.
class DeviceBank {
 public:
  DeviceBank() = default;
  explicit DeviceBank(std::vector<Device> devices);

  [[nodiscard]] const std::vector<Device>& devices() const noexcept { return devices_; }
  [[nodiscard]] const Device* find(std::string_view id) const;
  Device* find(std::string_view id);

  /// Field metadata, or nullopt when the binding does not resolve.
  [[nodiscard]] std::optional<FieldInfo> field_info(const DeviceField& binding) const;

  [[nodiscard]] SignalValue read(const DeviceField& binding) const;
  void write(const DeviceField& binding, const SignalValue& value);

  /// Advances heaters and motors. Devices without dynamics are untouched.
  void step_physics(double dt_s);

  bool set_epaper_text(std::string_view device, std::string_view text);

  [[nodiscard]] nlohmann::json to_json() const;

 private:
  std::vector<Device> devices_;
};

}  // namespace k4i::devices
