#include "k4i/orchestrator/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "k4i/error.hpp"

namespace k4i::orchestrator {

using nlohmann::json;
using devices::Device;
using plc::PlcRole;

std::string_view to_string(ClockMode mode) { return mode == ClockMode::fast ? "fast" : "realtime"; }
std::string_view to_string(FormFactor form) { return form == FormFactor::tabletop ? "tabletop" : "trolley"; }

std::size_t ScenarioConfig::plc_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : panels) n += p.plc_count();
  return n;
}

std::vector<Device> standard_inventory(PlcRole role) {
  auto dev = [](std::string id, std::string_view type) {
    return Device{std::move(id), devices::make_device(type, json::object())};
  };
  std::vector<Device> out;
  for (const char* id : {"led1", "led2", "led3"}) out.push_back(dev(id, "led"));
  out.push_back(dev("button1", "button"));
  out.push_back(dev("button2", "button"));
  if (role == PlcRole::master) {
    out.push_back(dev("key_switch", "key_switch"));
    out.push_back(dev("motion1", "motion"));
    out.push_back(dev("motion2", "motion"));
    out.push_back(dev("motor", "motor"));
  } else {
    // The heating element is the panel's high-power LED; its id keeps the
    // three indicator LEDs on coils 0..2.
    out.push_back(dev("power_led", "heater"));
    out.push_back(Device{"temp1", devices::make_device("thermometer", json{{"heater", "power_led"}})});
    out.push_back(dev("light1", "light_sensor"));
    out.push_back(dev("display", "seven_segment"));
    out.push_back(dev("epaper", "epaper"));
  }
  return out;
}

std::vector<plc::PointSpec> derive_points(const std::vector<Device>& devs) {
  const devices::DeviceBank bank(devs);
  std::vector<plc::PointSpec> out;
  for (const auto& d : devs) {
    for (const auto& dp : devices::default_points(d)) {
      const devices::DeviceField field{d.id, dp.field};
      const auto info = bank.field_info(field);
      if (!info) continue;
      plc::PointSpec spec;
      spec.name = dp.name;
      spec.direction = info->actuator ? plc::Direction::output : plc::Direction::input;
      spec.kind = info->kind;
      spec.unit = info->unit;
      spec.binding = d.id + "." + dp.field;
      out.push_back(std::move(spec));
    }
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::not_found, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

class Loader {
 public:
  explicit Loader(std::filesystem::path base) : base_(std::move(base)) {}

  ScenarioConfig load(std::string_view text) {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ValidationError("", std::string("invalid JSON: ") + e.what());
    }
    ScenarioConfig cfg;
    if (!doc.is_object()) throw ValidationError("", "document must be an object");
    if (doc.value("schema", "") != "k4i-scenario/1") issue("/schema", "expected \"k4i-scenario/1\"");
    cfg.name = str(doc, "name", "", true);

    if (const auto clock = doc.find("clock"); clock != doc.end()) {
      if (!clock->is_object()) {
        issue("/clock", "must be an object");
      } else {
        cfg.tick_ms = integer(*clock, "tick_ms", "/clock", 10);
        if (cfg.tick_ms <= 0) issue("/clock/tick_ms", "must be positive");
        const std::string mode = str(*clock, "mode", "/clock", false, "fast");
        if (mode == "fast") cfg.mode = ClockMode::fast;
        else if (mode == "realtime") cfg.mode = ClockMode::realtime;
        else issue("/clock/mode", "expected realtime or fast");
      }
    }

    const auto panels = doc.find("panels");
    if (panels == doc.end() || !panels->is_array()) {
      issue("/panels", "missing or not an array");
    } else if (panels->empty()) {
      issue("/panels", "at least one panel is required");
    } else {
      std::set<std::string> ids;
      for (std::size_t i = 0; i < panels->size(); ++i) {
        const std::string path = "/panels/" + std::to_string(i);
        auto panel = parse_panel((*panels)[i], path, cfg.tick_ms);
        if (!panel.id.empty() && !ids.insert(panel.id).second) issue(path + "/id", "duplicate panel id \"" + panel.id + "\"");
        cfg.panels.push_back(std::move(panel));
      }
    }

    if (const auto network = doc.find("network"); network != doc.end()) parse_network(*network, cfg.network);
    if (const auto sup = doc.find("supervisor"); sup != doc.end()) {
      if (!sup->is_object()) {
        issue("/supervisor", "must be an object");
      } else {
        cfg.supervisor.enabled = true;
        cfg.supervisor.poll_ms = integer(*sup, "poll_ms", "/supervisor", 500);
        if (cfg.supervisor.poll_ms <= 0) issue("/supervisor/poll_ms", "must be positive");
        else if (cfg.tick_ms > 0 && cfg.supervisor.poll_ms % cfg.tick_ms != 0)
          issue("/supervisor/poll_ms", "must be a multiple of tick_ms");
      }
    }
    if (const auto stimuli = doc.find("stimuli"); stimuli != doc.end()) parse_stimuli(*stimuli, cfg);
    if (const auto game = doc.find("game"); game != doc.end()) {
      if (!game->is_string()) issue("/game", "must be a path string");
      else cfg.game = base_ / game->get<std::string>();
    }

    if (!issues_.empty()) throw ValidationError(std::move(issues_));
    return cfg;
  }

 private:
  void issue(std::string path, std::string message) { issues_.push_back({std::move(path), std::move(message)}); }

  std::string str(const json& obj, const char* key, const std::string& path, bool required,
                  std::string fallback = {}) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) issue(path + "/" + key, "missing");
      return fallback;
    }
    if (!it->is_string()) {
      issue(path + "/" + key, "not a string");
      return fallback;
    }
    return it->get<std::string>();
  }

  std::int64_t integer(const json& obj, const char* key, const std::string& path, std::int64_t fallback) {
    const auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number_integer()) {
      issue(path + "/" + key, "not an integer");
      return fallback;
    }
    return it->get<std::int64_t>();
  }

  double number(const json& obj, const char* key, const std::string& path, double fallback) {
    const auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number()) {
      issue(path + "/" + key, "not a number");
      return fallback;
    }
    return it->get<double>();
  }

  PanelTopology parse_panel(const json& obj, const std::string& path, std::int64_t tick_ms) {
    PanelTopology panel;
    if (!obj.is_object()) {
      issue(path, "panel must be an object");
      return panel;
    }
    panel.id = str(obj, "id", path, true);
    if (!panel.id.empty() && (panel.id.find('/') != std::string::npos || panel.id.find('+') != std::string::npos ||
                              panel.id.find('#') != std::string::npos))
      issue(path + "/id", "must not contain '/', '+' or '#'");
    const std::string form = str(obj, "form_factor", path, false, "tabletop");
    if (form == "tabletop") panel.form_factor = FormFactor::tabletop;
    else if (form == "trolley") panel.form_factor = FormFactor::trolley;
    else issue(path + "/form_factor", "expected tabletop or trolley");

    std::set<std::string> ids;
    const auto master = obj.find("master");
    if (master == obj.end()) {
      issue(path + "/master", "every panel needs exactly one master");
    } else {
      panel.master = parse_plc(*master, path + "/master", PlcRole::master, tick_ms);
      ids.insert(panel.master.id);
    }
    if (const auto slaves = obj.find("slaves"); slaves != obj.end()) {
      if (!slaves->is_array()) {
        issue(path + "/slaves", "must be an array");
      } else {
        for (std::size_t i = 0; i < slaves->size(); ++i) {
          const std::string sp = path + "/slaves/" + std::to_string(i);
          auto plc = parse_plc((*slaves)[i], sp, PlcRole::slave, tick_ms);
          if (!plc.id.empty() && !ids.insert(plc.id).second) issue(sp + "/id", "duplicate PLC id \"" + plc.id + "\"");
          panel.slaves.push_back(std::move(plc));
        }
      }
    }
    return panel;
  }

  std::vector<Device> parse_devices(const json& obj, const std::string& path, PlcRole role) {
    std::vector<Device> devs;
    const std::string inventory =
        str(obj, "inventory", path, false, role == PlcRole::master ? "master" : "slave");
    if (inventory == "master") devs = standard_inventory(PlcRole::master);
    else if (inventory == "slave") devs = standard_inventory(PlcRole::slave);
    else if (inventory != "none") issue(path + "/inventory", "expected master, slave or none");

    const auto list = obj.find("devices");
    if (list == obj.end()) return devs;
    if (!list->is_array()) {
      issue(path + "/devices", "must be an array");
      return devs;
    }
    std::set<std::string> explicit_ids;
    for (std::size_t i = 0; i < list->size(); ++i) {
      const auto& d = (*list)[i];
      const std::string dp = path + "/devices/" + std::to_string(i);
      if (!d.is_object()) {
        issue(dp, "device must be an object");
        continue;
      }
      const std::string id = str(d, "id", dp, true);
      if (id.empty()) continue;
      if (!plc::valid_point_name(id)) issue(dp + "/id", "device ids use [a-z0-9_], at most 32 characters");
      if (!explicit_ids.insert(id).second) {
        issue(dp + "/id", "duplicate device id \"" + id + "\"");
        continue;
      }
      auto existing = std::find_if(devs.begin(), devs.end(), [&](const Device& x) { return x.id == id; });
      std::string type = str(d, "type", dp, existing == devs.end());
      if (type.empty() && existing != devs.end()) type = std::string(devices::device_type_name(existing->model));
      if (type.empty()) continue;
      try {
        Device dev{id, devices::make_device(type, d.contains("params") ? d["params"] : json::object())};
        if (existing != devs.end()) *existing = std::move(dev);
        else devs.push_back(std::move(dev));
      } catch (const Error& e) {
        issue(dp, e.what());
      }
    }
    return devs;
  }

  std::optional<plc::PointSpec> parse_point(const json& p, const std::string& path) {
    if (!p.is_object()) {
      issue(path, "point must be an object");
      return std::nullopt;
    }
    plc::PointSpec spec;
    spec.name = str(p, "name", path, true);
    const std::string dir = str(p, "direction", path, true);
    if (dir == "input") spec.direction = plc::Direction::input;
    else if (dir == "output") spec.direction = plc::Direction::output;
    else if (!dir.empty()) issue(path + "/direction", "expected input or output");
    const std::string kind = str(p, "kind", path, true);
    if (kind == "digital") spec.kind = plc::SignalKind::digital;
    else if (kind == "analog") spec.kind = plc::SignalKind::analog;
    else if (!kind.empty()) issue(path + "/kind", "expected digital or analog");
    const std::string unit = str(p, "unit", path, false, "none");
    if (const auto u = devices::parse_unit(unit)) spec.unit = *u;
    else issue(path + "/unit", "unknown unit \"" + unit + "\"");
    spec.binding = str(p, "binding", path, true);
    return spec;
  }

  PlcConfig parse_plc(const json& obj, const std::string& path, PlcRole role, std::int64_t tick_ms) {
    PlcConfig cfg;
    cfg.role = role;
    if (!obj.is_object()) {
      issue(path, "PLC must be an object");
      return cfg;
    }
    cfg.id = str(obj, "id", path, true);
    if (!cfg.id.empty() && (cfg.id.find('/') != std::string::npos || cfg.id.find('+') != std::string::npos ||
                            cfg.id.find('#') != std::string::npos))
      issue(path + "/id", "must not contain '/', '+' or '#'");
    cfg.model_label =
        str(obj, "model_label", path, false, role == PlcRole::master ? "UniPi Neuron M103" : "UniPi Neuron S103");
    cfg.scan_ms = integer(obj, "scan_ms", path, 50);
    if (cfg.scan_ms <= 0) issue(path + "/scan_ms", "must be positive");
    else if (tick_ms > 0 && cfg.scan_ms % tick_ms != 0) issue(path + "/scan_ms", "must be a multiple of tick_ms");

    const std::size_t before = issues_.size();
    cfg.devices = parse_devices(obj, path, role);
    if (role == PlcRole::slave) {
      for (std::size_t i = 0; i < cfg.devices.size(); ++i)
        if (std::holds_alternative<devices::Motor>(cfg.devices[i].model))
          issue(path + "/devices", "only the master drives the linear motor");
    }

    std::optional<devices::DeviceBank> bank;
    if (issues_.size() == before) {
      try {
        bank.emplace(cfg.devices);
      } catch (const Error& e) {
        issue(path + "/devices", e.what());
      }
    }

    if (const auto pts = obj.find("points"); pts != obj.end()) {
      if (!pts->is_array()) {
        issue(path + "/points", "must be an array");
      } else {
        for (std::size_t i = 0; i < pts->size(); ++i)
          if (auto spec = parse_point((*pts)[i], path + "/points/" + std::to_string(i)))
            cfg.points.push_back(std::move(*spec));
      }
    } else if (bank) {
      cfg.points = derive_points(cfg.devices);
    }
    if (bank)
      for (const auto& problem : plc::check_points(cfg.points, *bank)) issue(path + "/points", problem);

    std::optional<std::string> source;
    if (const auto prog = obj.find("program"); prog != obj.end()) {
      if (!prog->is_string()) {
        issue(path + "/program", "must be a path string");
      } else {
        cfg.program_source = prog->get<std::string>();
        try {
          source = read_text_file(base_ / cfg.program_source);
        } catch (const Error&) {
          issue(path + "/program", "cannot read program \"" + cfg.program_source + "\"");
        }
      }
    } else if (const auto inline_text = obj.find("program_text"); inline_text != obj.end()) {
      if (!inline_text->is_string()) {
        issue(path + "/program_text", "must be a string");
      } else {
        cfg.program_source = "<inline>";
        source = inline_text->get<std::string>();
      }
    }
    if (source) {
      try {
        cfg.program = plc::parse_program(*source, cfg.points);
      } catch (const ParseError& e) {
        issue(path + (cfg.program_source == "<inline>" ? "/program_text" : "/program"), e.what());
      }
    }
    return cfg;
  }

  void parse_network(const json& obj, NetworkConfig& net) {
    if (!obj.is_object()) {
      issue("/network", "must be an object");
      return;
    }
    if (const auto lat = obj.find("latency_ms"); lat != obj.end()) {
      if (lat->is_number()) {
        net.link.latency_min_ms = net.link.latency_max_ms = lat->get<double>();
      } else if (lat->is_object()) {
        net.link.latency_min_ms = number(*lat, "min", "/network/latency_ms", 0.0);
        net.link.latency_max_ms = number(*lat, "max", "/network/latency_ms", net.link.latency_min_ms);
      } else {
        issue("/network/latency_ms", "expected a number or {min, max}");
      }
    }
    net.link.drop_probability = number(obj, "drop_probability", "/network", 0.0);
    if (const auto seed = obj.find("seed"); seed != obj.end()) {
      if (seed->is_number_unsigned()) net.link.seed = seed->get<std::uint64_t>();
      else if (seed->is_number_integer() && seed->get<std::int64_t>() >= 0) net.link.seed = seed->get<std::uint64_t>();
      else issue("/network/seed", "must be a non-negative integer");
    }
    try {
      net::validate(net.link);
    } catch (const Error& e) {
      issue("/network", e.what());
    }
    if (const auto att = obj.find("attacker"); att != obj.end()) {
      if (att->is_boolean()) net.attacker = att->get<bool>();
      else issue("/network/attacker", "must be a boolean");
    }
    if (const auto br = obj.find("bridges"); br != obj.end()) {
      if (!br->is_object()) {
        issue("/network/bridges", "must be an object");
      } else {
        net.bridges.enabled = br->value("enabled", true);
        net.bridges.host = str(*br, "host", "/network/bridges", false, "127.0.0.1");
        net.bridges.base_port = static_cast<int>(integer(*br, "base_port", "/network/bridges", 15020));
        if (net.bridges.base_port < 0 || net.bridges.base_port > 65535)
          issue("/network/bridges/base_port", "must be a TCP port");
      }
    }
  }

  void parse_stimuli(const json& list, ScenarioConfig& cfg) {
    if (!list.is_array()) {
      issue("/stimuli", "must be an array");
      return;
    }
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = "/stimuli/" + std::to_string(i);
      const auto& s = list[i];
      if (!s.is_object()) {
        issue(path, "must be an object");
        continue;
      }
      StimulusEvent ev;
      ev.t_ms = integer(s, "t_ms", path, -1);
      if (ev.t_ms < 0) issue(path + "/t_ms", "missing or negative");
      ev.panel = str(s, "panel", path, true);
      ev.plc = str(s, "plc", path, true);
      ev.point = str(s, "point", path, true);
      const PlcConfig* target = nullptr;
      for (const auto& panel : cfg.panels) {
        if (panel.id != ev.panel) continue;
        if (panel.master.id == ev.plc) target = &panel.master;
        for (const auto& slave : panel.slaves)
          if (slave.id == ev.plc) target = &slave;
      }
      if (target == nullptr) {
        if (!ev.panel.empty() && !ev.plc.empty()) issue(path, "unknown PLC \"" + ev.panel + "/" + ev.plc + "\"");
        continue;
      }
      const auto spec = std::find_if(target->points.begin(), target->points.end(),
                                     [&](const plc::PointSpec& p) { return p.name == ev.point; });
      if (spec == target->points.end()) {
        issue(path + "/point", "unknown point \"" + ev.point + "\"");
        continue;
      }
      const auto binding = devices::parse_binding(spec->binding);
      bool stimulus = false;
      try {
        const devices::DeviceBank bank(target->devices);
        const auto info = binding ? bank.field_info(*binding) : std::nullopt;
        stimulus = info && info->stimulus;
      } catch (const Error&) {
      }
      if (!stimulus) {
        issue(path + "/point", "\"" + ev.point + "\" is not a stimulus input");
        continue;
      }
      const auto v = s.find("value");
      if (v == s.end() || !v->is_boolean()) {
        issue(path + "/value", "stimulus value must be a boolean");
        continue;
      }
      ev.value = devices::SignalValue::digital(v->get<bool>());
      cfg.stimuli.push_back(std::move(ev));
    }
    std::stable_sort(cfg.stimuli.begin(), cfg.stimuli.end(),
                     [](const StimulusEvent& a, const StimulusEvent& b) { return a.t_ms < b.t_ms; });
  }

  std::filesystem::path base_;
  std::vector<Issue> issues_;
};

}  // namespace

ScenarioConfig load_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  return Loader(base_dir).load(text);
}

ScenarioConfig load_scenario_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  return load_scenario(text, path.parent_path());
}

}  // namespace k4i::orchestrator
