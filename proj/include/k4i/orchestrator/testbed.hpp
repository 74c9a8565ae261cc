#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "k4i/net/switch.hpp"
#include "k4i/orchestrator/scenario.hpp"
#include "k4i/plc/plc.hpp"
#include "k4i/telemetry/bus.hpp"
#include "k4i/training/session.hpp"

namespace k4i::orchestrator {

inline constexpr std::string_view controller_endpoint = "controller";
inline constexpr std::string_view hmi_endpoint = "hmi";
inline constexpr std::string_view attacker_endpoint = "attacker";
inline constexpr std::size_t inbox_capacity = 1024;

/// Everything a game file may reference in this scenario.
training::GameReferences game_references(const ScenarioConfig& config);

/// Loads a game and checks it against the scenario.
training::GameSpec load_game_for(const ScenarioConfig& config, std::string_view text);

struct PlcEntry {
  plc::Plc plc;
  std::size_t panel = 0;
  std::string endpoint;  // "<panel-id>/<plc-id>"
  net::PortHandle port;
  std::uint64_t frames_served = 0;
  std::uint64_t malformed_frames = 0;
};

struct PanelEntry {
  std::string id;
  int index = 0;  // 1-based, used in telemetry topics
  FormFactor form_factor = FormFactor::tabletop;
  std::vector<std::size_t> plcs;  // master first
};

enum class PointWriteResult { ok, unknown_panel, unknown_plc, unknown_point, not_writable, type_mismatch };

std::string_view to_string(PointWriteResult result);

struct InstantiateOptions {
  std::optional<std::uint64_t> seed;  // overrides the scenario's network seed
  std::optional<training::GameSpec> game;
  std::string player = "player";
};

/// A running scenario. Single-threaded: every call must come from the thread
/// that owns the simulation loop.
class Testbed {
 public:
  explicit Testbed(ScenarioConfig config, InstantiateOptions options = {});

  Testbed(const Testbed&) = delete;
  Testbed& operator=(const Testbed&) = delete;

  /// Advances by duration in tick_ms steps. Throws a validation Error unless
  /// duration is a non-negative multiple of tick_ms, a lifecycle Error after
  /// teardown.
  void run(std::int64_t duration_ms);
  void tick();
  /// Back to the exact post-instantiate state, telemetry included.
  void reset();
  void teardown();
  [[nodiscard]] bool torn_down() const noexcept { return torn_down_; }

  [[nodiscard]] std::int64_t now_ms() const noexcept { return state_.now_ms; }
  [[nodiscard]] std::int64_t tick_ms() const noexcept { return config_.tick_ms; }
  [[nodiscard]] const ScenarioConfig& config() const noexcept { return config_; }

  /// Accepts the panel id or its 1-based index.
  [[nodiscard]] std::optional<std::size_t> panel_index(std::string_view ref) const;
  [[nodiscard]] const PlcEntry* find_plc(std::string_view panel, std::string_view plc) const;
  [[nodiscard]] std::span<const PanelEntry> panels() const noexcept { return panels_; }
  [[nodiscard]] std::span<const PlcEntry> plcs() const noexcept { return state_.plcs; }

  /// Canonical endpoint id for a full id or an unambiguous PLC id.
  [[nodiscard]] std::optional<std::string> resolve_endpoint(std::string_view ref) const;
  [[nodiscard]] std::vector<net::Endpoint> endpoints() const { return state_.network.topology(); }
  [[nodiscard]] bool attacker_provisioned() const noexcept { return config_.network.attacker; }

  [[nodiscard]] std::optional<devices::SignalValue> read_point(std::string_view panel, std::string_view plc,
                                                               std::string_view point) const;
  PointWriteResult set_stimulus(std::string_view panel, std::string_view plc, std::string_view point,
                                const devices::SignalValue& value);

  /// Sends now from a non-PLC endpoint. Throws a routing Error on an unknown
  /// endpoint.
  void send(std::string_view src, std::string_view dst, Bytes payload);
  /// Queues a frame for the network phase of the first tick at or after t_ms.
  void schedule_injection(std::int64_t t_ms, std::string src, std::string dst, Bytes payload);
  /// Re-sends the attacker's frames from a capture. Without start_ms the
  /// original timestamps are kept; otherwise the first frame goes at start_ms.
  std::size_t replay(std::span<const net::CaptureRecord> records, std::optional<std::int64_t> start_ms = std::nullopt);

  std::vector<net::Delivery> take_inbox(std::string_view endpoint);
  [[nodiscard]] const net::Switch& network() const noexcept { return state_.network; }
  [[nodiscard]] std::vector<net::CaptureRecord> capture(std::optional<std::string_view> endpoint = std::nullopt) const;
  [[nodiscard]] std::string export_capture(std::optional<std::string_view> endpoint = std::nullopt) const;

  using DeliveryHook = std::function<void(const net::Delivery&)>;
  /// Called from tick() for frames delivered to controller, hmi or attacker.
  void set_delivery_hook(DeliveryHook hook) { hook_ = std::move(hook); }

  [[nodiscard]] telemetry::TopicBus& bus() noexcept { return *bus_; }

  [[nodiscard]] bool has_game() const noexcept { return state_.game.has_value(); }
  [[nodiscard]] const training::GameSession* game() const noexcept {
    return state_.game ? &*state_.game : nullptr;
  }
  /// Throws a not_found Error when no game is loaded, a validation Error for
  /// an unknown level.
  training::SubmitResult submit_flag(std::string_view level, std::string_view flag);

  [[nodiscard]] nlohmann::json snapshot() const;
  [[nodiscard]] nlohmann::json panels_json() const;
  [[nodiscard]] nlohmann::json plc_json(const PlcEntry& entry) const;
  [[nodiscard]] std::string digest() const;
  /// Digest over panel state only (devices, images, tables, timers).
  [[nodiscard]] std::string state_digest() const;

  [[nodiscard]] std::uint64_t scans_total() const;
  /// Scans that should have happened by now but did not.
  [[nodiscard]] std::uint64_t missed_scans() const;

 private:
  struct Injection {
    std::int64_t t_ms = 0;
    std::uint64_t order = 0;
    std::string src;
    std::string dst;
    Bytes payload;
  };

  struct State {
    std::int64_t now_ms = 0;
    std::vector<PlcEntry> plcs;
    net::Switch network;
    std::map<std::string, net::PortHandle, std::less<>> ports;  // non-PLC endpoints
    std::map<std::string, std::deque<net::Delivery>, std::less<>> inboxes;
    std::size_t next_stimulus = 0;
    std::vector<Injection> injections;  // sorted by (t_ms, order)
    std::uint64_t injection_order = 0;
    std::uint16_t supervisor_txn = 0;
    std::vector<std::vector<devices::SignalValue>> published;  // per PLC, image order
    std::size_t capture_cursor = 0;
    std::optional<training::GameSession> game;
  };

  void require_live() const;
  void phase_stimuli();
  void phase_physics();
  void phase_scans(std::vector<std::size_t>& scanned);
  void phase_network();
  void phase_telemetry(const std::vector<std::size_t>& scanned);
  void phase_game();
  void deliver(const net::Delivery& d);
  void publish_all(std::int64_t ts);
  [[nodiscard]] std::optional<std::size_t> plc_by_endpoint(std::string_view id) const;
  [[nodiscard]] const PlcEntry* plc_at(std::size_t panel, std::string_view id) const;

  ScenarioConfig config_;
  std::vector<PanelEntry> panels_;
  std::map<std::string, std::size_t, std::less<>> endpoint_index_;
  State state_;
  State initial_;
  std::map<std::string, telemetry::TelemetryMessage> initial_retained_;
  std::unique_ptr<telemetry::TopicBus> bus_;
  DeliveryHook hook_;
  bool torn_down_ = false;
};

}  // namespace k4i::orchestrator
