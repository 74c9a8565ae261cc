#include "k4i/devices/bank.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "k4i/devices/light.hpp"
#include "k4i/error.hpp"

namespace k4i::devices {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double number_param(const json& params, const char* key, double fallback) {
  if (!params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_number()) throw Error(ErrorKind::validation, std::string("parameter '") + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw Error(ErrorKind::validation, std::string("parameter '") + key + "' must be finite");
  return d;
}

std::int64_t integer_param(const json& params, const char* key, std::int64_t fallback) {
  if (!params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_number_integer()) throw Error(ErrorKind::validation, std::string("parameter '") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

bool bool_param(const json& params, const char* key, bool fallback) {
  if (!params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_boolean()) throw Error(ErrorKind::validation, std::string("parameter '") + key + "' must be a boolean");
  return v.get<bool>();
}

std::string string_param(const json& params, const char* key, std::string fallback) {
  if (!params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_string()) throw Error(ErrorKind::validation, std::string("parameter '") + key + "' must be a string");
  return v.get<std::string>();
}

SegmentPair segments_for(double value) {
  const auto rounded = std::llround(value);
  if (rounded < 0 || rounded > 99) return seven_segment_overflow;
  return render_seven_segment(static_cast<int>(rounded));
}

constexpr FieldInfo digital_actuator{SignalKind::digital, Unit::none, true, false};
constexpr FieldInfo digital_stimulus{SignalKind::digital, Unit::none, false, true};
constexpr FieldInfo digital_sensor{SignalKind::digital, Unit::none, false, false};

}  // namespace

std::string_view device_type_name(const DeviceModel& model) {
  return std::visit(overloaded{
                        [](const Led&) -> std::string_view { return "led"; },
                        [](const Stimulus& s) -> std::string_view {
                          switch (s.kind) {
                            case StimulusKind::button: return "button";
                            case StimulusKind::key_switch: return "key_switch";
                            case StimulusKind::motion: return "motion";
                          }
                          return "button";
                        },
                        [](const Heater&) -> std::string_view { return "heater"; },
                        [](const Thermometer&) -> std::string_view { return "thermometer"; },
                        [](const LightSensor&) -> std::string_view { return "light_sensor"; },
                        [](const SevenSegment&) -> std::string_view { return "seven_segment"; },
                        [](const EPaper&) -> std::string_view { return "epaper"; },
                        [](const Motor&) -> std::string_view { return "motor"; },
                    },
                    model);
}

DeviceModel make_device(std::string_view type, const json& params) {
  if (!params.is_null() && !params.is_object()) throw Error(ErrorKind::validation, "device params must be an object");
  const json p = params.is_null() ? json::object() : params;

  if (type == "led") return Led{bool_param(p, "on", false)};
  if (type == "button") return Stimulus{StimulusKind::button, bool_param(p, "active", false)};
  if (type == "key_switch") return Stimulus{StimulusKind::key_switch, bool_param(p, "active", false)};
  if (type == "motion") return Stimulus{StimulusKind::motion, bool_param(p, "active", false)};
  if (type == "heater") {
    Heater h;
    h.rated_power_w = number_param(p, "rated_power_w", 10.0);
    if (h.rated_power_w < 0.0) throw Error(ErrorKind::validation, "rated_power_w must be non-negative");
    h.on = bool_param(p, "on", false);
    h.thermal.ambient_c = number_param(p, "ambient_c", 25.0);
    h.thermal.temperature_c = number_param(p, "initial_c", h.thermal.ambient_c);
    h.thermal.heat_capacity_j_per_k = number_param(p, "heat_capacity_j_per_k", 20.0);
    h.thermal.loss_coeff_w_per_k = number_param(p, "loss_coeff_w_per_k", 0.5);
    h.thermal.heater_power_w = h.on ? h.rated_power_w : 0.0;
    validate(h.thermal);
    return h;
  }
  if (type == "thermometer") {
    Thermometer t{string_param(p, "heater", "heater"), number_param(p, "resolution_c", 0.0625)};
    if (t.resolution_c < 0.0) throw Error(ErrorKind::validation, "resolution_c must be non-negative");
    return t;
  }
  if (type == "light_sensor") {
    LightSensor l;
    l.ambient_lux = number_param(p, "ambient_lux", 100.0);
    l.per_led_lux = number_param(p, "per_led_lux", 20.0);
    if (l.ambient_lux < 0.0 || l.per_led_lux < 0.0) throw Error(ErrorKind::validation, "light levels must be non-negative");
    if (p.contains("leds")) {
      if (!p.at("leds").is_array()) throw Error(ErrorKind::validation, "parameter 'leds' must be an array");
      for (const auto& id : p.at("leds")) {
        if (!id.is_string()) throw Error(ErrorKind::validation, "parameter 'leds' must list device ids");
        l.leds.push_back(id.get<std::string>());
      }
    }
    return l;
  }
  if (type == "seven_segment") {
    SevenSegment s;
    s.value = number_param(p, "value", 0.0);
    s.segments = segments_for(s.value);
    return s;
  }
  if (type == "epaper") {
    EPaper e{string_param(p, "text", "")};
    validate_epaper_text(e.text);
    return e;
  }
  if (type == "motor") {
    std::array<std::int64_t, 3> centers{1000, 2000, 3000};
    if (p.contains("ir_centers")) {
      const auto& c = p.at("ir_centers");
      if (!c.is_array() || c.size() != 3) throw Error(ErrorKind::validation, "ir_centers must list 3 positions");
      for (std::size_t k = 0; k < 3; ++k) {
        if (!c[k].is_number_integer()) throw Error(ErrorKind::validation, "ir_centers must be integers");
        centers[k] = c[k].get<std::int64_t>();
      }
    }
    const auto position = integer_param(p, "position", 0);
    return Motor{make_motor_state(position, integer_param(p, "target", position),
                                  number_param(p, "speed_steps_per_s", 500.0), integer_param(p, "max_steps", 4000),
                                  centers, integer_param(p, "ir_window_steps", 25))};
  }
  throw Error(ErrorKind::validation, "unknown device type '" + std::string(type) + "'");
}

std::optional<DeviceField> parse_binding(std::string_view binding) {
  if (binding.empty()) return std::nullopt;
  const auto dot = binding.find('.');
  if (dot == std::string_view::npos) return DeviceField{std::string(binding), ""};
  if (dot == 0 || dot + 1 == binding.size()) return std::nullopt;
  return DeviceField{std::string(binding.substr(0, dot)), std::string(binding.substr(dot + 1))};
}

namespace {

// Resolves the primary field when a binding names only the device.
std::string primary_field(const DeviceModel& model) {
  return std::visit(overloaded{
                        [](const Led&) -> std::string { return "on"; },
                        [](const Stimulus&) -> std::string { return "active"; },
                        [](const Heater&) -> std::string { return "on"; },
                        [](const Thermometer&) -> std::string { return "temperature"; },
                        [](const LightSensor&) -> std::string { return "lux"; },
                        [](const SevenSegment&) -> std::string { return "value"; },
                        [](const EPaper&) -> std::string { return ""; },
                        [](const Motor&) -> std::string { return "position"; },
                    },
                    model);
}

std::optional<FieldInfo> info_for(const DeviceModel& model, std::string_view field) {
  return std::visit(
      overloaded{
          [&](const Led&) -> std::optional<FieldInfo> {
            if (field == "on") return digital_actuator;
            return std::nullopt;
          },
          [&](const Stimulus&) -> std::optional<FieldInfo> {
            if (field == "active") return digital_stimulus;
            return std::nullopt;
          },
          [&](const Heater&) -> std::optional<FieldInfo> {
            if (field == "on") return digital_actuator;
            return std::nullopt;
          },
          [&](const Thermometer&) -> std::optional<FieldInfo> {
            if (field == "temperature") return FieldInfo{SignalKind::analog, Unit::celsius, false, false};
            return std::nullopt;
          },
          [&](const LightSensor&) -> std::optional<FieldInfo> {
            if (field == "lux") return FieldInfo{SignalKind::analog, Unit::lux, false, false};
            return std::nullopt;
          },
          [&](const SevenSegment&) -> std::optional<FieldInfo> {
            if (field == "value") return FieldInfo{SignalKind::analog, Unit::none, true, false};
            return std::nullopt;
          },
          [&](const EPaper&) -> std::optional<FieldInfo> { return std::nullopt; },
          [&](const Motor&) -> std::optional<FieldInfo> {
            if (field == "target") return FieldInfo{SignalKind::analog, Unit::steps, true, false};
            if (field == "position") return FieldInfo{SignalKind::analog, Unit::steps, false, false};
            if (field == "endstop_low" || field == "endstop_high" || field == "ir1" || field == "ir2" ||
                field == "ir3") {
              return digital_sensor;
            }
            return std::nullopt;
          },
      },
      model);
}

}  // namespace

std::vector<DefaultPoint> default_points(const Device& device) {
  if (std::holds_alternative<Motor>(device.model)) {
    std::vector<DefaultPoint> out;
    for (const char* f : {"target", "position", "endstop_low", "endstop_high", "ir1", "ir2", "ir3"}) {
      out.push_back({device.id + "_" + f, f});
    }
    return out;
  }
  const auto field = primary_field(device.model);
  if (field.empty()) return {};
  return {{device.id, field}};
}

DeviceBank::DeviceBank(std::vector<Device> devices) : devices_(std::move(devices)) {
  for (auto& d : devices_) {
    if (auto* light = std::get_if<LightSensor>(&d.model)) {
      if (light->leds.empty()) {
        for (const auto& other : devices_) {
          if (std::holds_alternative<Led>(other.model)) light->leds.push_back(other.id);
        }
      }
      for (const auto& id : light->leds) {
        const auto* led = find(id);
        if (led == nullptr || !std::holds_alternative<Led>(led->model)) {
          throw Error(ErrorKind::validation, "light sensor '" + d.id + "' references unknown LED '" + id + "'");
        }
      }
    }
    if (const auto* thermo = std::get_if<Thermometer>(&d.model)) {
      const auto* heater = find(thermo->heater);
      if (heater == nullptr || !std::holds_alternative<Heater>(heater->model)) {
        throw Error(ErrorKind::validation,
                    "thermometer '" + d.id + "' references unknown heater '" + thermo->heater + "'");
      }
    }
  }
}

const Device* DeviceBank::find(std::string_view id) const {
  for (const auto& d : devices_) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

Device* DeviceBank::find(std::string_view id) {
  for (auto& d : devices_) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

std::optional<FieldInfo> DeviceBank::field_info(const DeviceField& binding) const {
  const auto* d = find(binding.device);
  if (d == nullptr) return std::nullopt;
  const auto field = binding.field.empty() ? primary_field(d->model) : binding.field;
  return info_for(d->model, field);
}

SignalValue DeviceBank::read(const DeviceField& binding) const {
  const auto* d = find(binding.device);
  if (d == nullptr) throw Error(ErrorKind::not_found, "unknown device '" + binding.device + "'");
  const auto field = binding.field.empty() ? primary_field(d->model) : binding.field;
  return std::visit(
      overloaded{
          [&](const Led& l) { return SignalValue::digital(l.on); },
          [&](const Stimulus& s) { return SignalValue::digital(s.active); },
          [&](const Heater& h) { return SignalValue::digital(h.on); },
          [&](const Thermometer& t) {
            const auto& heater = std::get<Heater>(find(t.heater)->model);
            return SignalValue::analog(quantize_temperature(heater.thermal.temperature_c, t.resolution_c),
                                       Unit::celsius);
          },
          [&](const LightSensor& l) {
            const auto n = l.leds.size();
            auto states = std::make_unique<bool[]>(n);
            for (std::size_t i = 0; i < n; ++i) states[i] = std::get<Led>(find(l.leds[i])->model).on;
            return SignalValue::analog(light_reading(std::span<const bool>(states.get(), n), l.ambient_lux, l.per_led_lux),
                                       Unit::lux);
          },
          [&](const SevenSegment& s) { return SignalValue::analog(s.value, Unit::none); },
          [&](const EPaper&) -> SignalValue {
            throw Error(ErrorKind::validation, "e-paper has no point field");
          },
          [&](const Motor& m) {
            const auto& s = m.state;
            if (field == "target") return SignalValue::analog(static_cast<double>(s.target_steps), Unit::steps);
            if (field == "position") return SignalValue::analog(static_cast<double>(s.position_steps), Unit::steps);
            if (field == "endstop_low") return SignalValue::digital(s.endstop_low);
            if (field == "endstop_high") return SignalValue::digital(s.endstop_high);
            if (field == "ir1") return SignalValue::digital(s.ir_sensor(0));
            if (field == "ir2") return SignalValue::digital(s.ir_sensor(1));
            if (field == "ir3") return SignalValue::digital(s.ir_sensor(2));
            throw Error(ErrorKind::not_found, "unknown motor field '" + field + "'");
          },
      },
      d->model);
}

void DeviceBank::write(const DeviceField& binding, const SignalValue& value) {
  auto* d = find(binding.device);
  if (d == nullptr) throw Error(ErrorKind::not_found, "unknown device '" + binding.device + "'");
  const auto field = binding.field.empty() ? primary_field(d->model) : binding.field;
  std::visit(overloaded{
                 [&](Led& l) { l.on = value.as_bool(); },
                 [&](Stimulus& s) { s.active = value.as_bool(); },
                 [&](Heater& h) {
                   h.on = value.as_bool();
                   h.thermal.heater_power_w = h.on ? h.rated_power_w : 0.0;
                 },
                 [&](SevenSegment& s) {
                   s.value = value.as_real();
                   s.segments = segments_for(s.value);
                 },
                 [&](Motor& m) {
                   if (field != "target") throw Error(ErrorKind::validation, "motor field '" + field + "' is read-only");
                   m.state.target_steps = std::llround(value.as_real());
                 },
                 [&](auto&) { throw Error(ErrorKind::validation, "device '" + d->id + "' is read-only"); },
             },
             d->model);
}

void DeviceBank::step_physics(double dt_s) {
  for (auto& d : devices_) {
    if (auto* h = std::get_if<Heater>(&d.model)) {
      h->thermal = thermal_step(h->thermal, dt_s);
    } else if (auto* m = std::get_if<Motor>(&d.model)) {
      if (m->state.position_steps != std::clamp<std::int64_t>(m->state.target_steps, 0, m->state.max_steps)) {
        m->state = motor_step(m->state, dt_s);
      }
    }
  }
}

bool DeviceBank::set_epaper_text(std::string_view device, std::string_view text) {
  auto* d = find(device);
  if (d == nullptr) return false;
  auto* e = std::get_if<EPaper>(&d->model);
  if (e == nullptr) return false;
  validate_epaper_text(text);
  e->text = std::string(text);
  return true;
}

json DeviceBank::to_json() const {
  json out = json::object();
  for (const auto& d : devices_) {
    json j = {{"type", device_type_name(d.model)}};
    std::visit(overloaded{
                   [&](const Led& l) { j["on"] = l.on; },
                   [&](const Stimulus& s) { j["active"] = s.active; },
                   [&](const Heater& h) {
                     j["on"] = h.on;
                     j["power_w"] = h.thermal.heater_power_w;
                     j["temperature_c"] = h.thermal.temperature_c;
                     j["ambient_c"] = h.thermal.ambient_c;
                   },
                   [&](const Thermometer& t) { j["heater"] = t.heater; },
                   [&](const LightSensor& l) { j["leds"] = l.leds; },
                   [&](const SevenSegment& s) {
                     j["value"] = s.value;
                     j["segments"] = {s.segments[0], s.segments[1]};
                   },
                   [&](const EPaper& e) { j["text"] = e.text; },
                   [&](const Motor& m) {
                     j["position_steps"] = m.state.position_steps;
                     j["target_steps"] = m.state.target_steps;
                     j["endstop_low"] = m.state.endstop_low;
                     j["endstop_high"] = m.state.endstop_high;
                     j["ir"] = {m.state.ir_sensor(0), m.state.ir_sensor(1), m.state.ir_sensor(2)};
                   },
               },
               d.model);
    out[d.id] = std::move(j);
  }
  return out;
}

}  // namespace k4i::devices
