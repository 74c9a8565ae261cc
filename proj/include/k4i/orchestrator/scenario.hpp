#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "k4i/devices/bank.hpp"
#include "k4i/net/switch.hpp"
#include "k4i/plc/plc.hpp"

namespace k4i::orchestrator {

enum class ClockMode { realtime, fast };
enum class FormFactor { tabletop, trolley };

std::string_view to_string(ClockMode mode);
std::string_view to_string(FormFactor form);

struct PlcConfig {
  std::string id;
  plc::PlcRole role = plc::PlcRole::slave;
  std::string model_label;
  std::vector<devices::Device> devices;
  std::vector<plc::PointSpec> points;
  std::string program_source;  // path as written in the scenario, or "<inline>"
  plc::ControlProgram program;
  std::int64_t scan_ms = 50;
};

struct PanelTopology {
  std::string id;
  FormFactor form_factor = FormFactor::tabletop;
  PlcConfig master;
  std::vector<PlcConfig> slaves;

  [[nodiscard]] std::size_t plc_count() const noexcept { return 1 + slaves.size(); }
};

struct StimulusEvent {
  std::int64_t t_ms = 0;
  std::string panel;
  std::string plc;
  std::string point;
  devices::SignalValue value;
};

struct BridgeConfig {
  bool enabled = false;
  std::string host = "127.0.0.1";
  int base_port = 15020;  // 0 picks ephemeral ports
};

struct NetworkConfig {
  net::LinkPolicy link;
  bool attacker = false;
  BridgeConfig bridges;
};

/// Optional SCADA poller: the controller endpoint reads every PLC's input
/// tables each poll period.
struct SupervisorConfig {
  bool enabled = false;
  std::int64_t poll_ms = 500;
};

struct ScenarioConfig {
  std::string name;
  std::int64_t tick_ms = 10;
  ClockMode mode = ClockMode::fast;
  std::vector<PanelTopology> panels;
  NetworkConfig network;
  SupervisorConfig supervisor;
  std::vector<StimulusEvent> stimuli;  // sorted by t_ms, stable
  std::optional<std::filesystem::path> game;  // resolved against the scenario file

  [[nodiscard]] std::size_t plc_count() const noexcept;
};

/// The stock device set of a master or slave PLC.
std::vector<devices::Device> standard_inventory(plc::PlcRole role);
/// One point per primary device field; actuators become outputs.
std::vector<plc::PointSpec> derive_points(const std::vector<devices::Device>& devices);

/// Parses and validates a "k4i-scenario/1" document. Program paths are
/// resolved against base_dir. Throws a ValidationError listing every problem.
ScenarioConfig load_scenario(std::string_view text, const std::filesystem::path& base_dir = {});
/// Reads the file first; a missing file is a not_found Error.
ScenarioConfig load_scenario_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace k4i::orchestrator
