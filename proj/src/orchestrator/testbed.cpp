#include "k4i/orchestrator/testbed.hpp"

#include <algorithm>
#include <charconv>

#include "k4i/digest.hpp"
#include "k4i/error.hpp"
#include "k4i/modbus/codec.hpp"
#include "k4i/modbus/server.hpp"

namespace k4i::orchestrator {

using nlohmann::json;
using devices::SignalValue;

std::string_view to_string(PointWriteResult result) {
  switch (result) {
    case PointWriteResult::ok: return "ok";
    case PointWriteResult::unknown_panel: return "unknown panel";
    case PointWriteResult::unknown_plc: return "unknown PLC";
    case PointWriteResult::unknown_point: return "unknown point";
    case PointWriteResult::not_writable: return "point is not a writable stimulus";
    case PointWriteResult::type_mismatch: return "value type does not match the point";
  }
  return "unknown";
}

training::GameReferences game_references(const ScenarioConfig& config) {
  training::GameReferences refs;
  refs.endpoints.insert(std::string(controller_endpoint));
  refs.endpoints.insert(std::string(hmi_endpoint));
  if (config.network.attacker) refs.endpoints.insert(std::string(attacker_endpoint));
  for (const auto& panel : config.panels) {
    auto add = [&](const PlcConfig& plc) {
      const std::string base = panel.id + "/" + plc.id;
      refs.endpoints.insert(base);
      for (const auto& p : plc.points) refs.points.emplace(base + "/" + p.name, p.kind);
      for (const auto& d : plc.devices)
        if (std::holds_alternative<devices::EPaper>(d.model)) refs.epapers.insert(base + "/" + d.id);
    };
    add(panel.master);
    for (const auto& s : panel.slaves) add(s);
  }
  return refs;
}

training::GameSpec load_game_for(const ScenarioConfig& config, std::string_view text) {
  return training::load_game(text, game_references(config));
}

namespace {

json value_json(const SignalValue& v) { return v.is_digital() ? json(v.as_bool()) : json(v.as_real()); }

plc::Plc build_plc(const PlcConfig& cfg) {
  plc::PlcSetup setup;
  setup.id = cfg.id;
  setup.role = cfg.role;
  setup.model_label = cfg.model_label;
  setup.points = cfg.points;
  setup.program = cfg.program;
  setup.devices = devices::DeviceBank(cfg.devices);
  setup.scan_ms = cfg.scan_ms;
  return plc::Plc(std::move(setup));
}

}  // namespace

Testbed::Testbed(ScenarioConfig config, InstantiateOptions options)
    : config_(std::move(config)), bus_(std::make_unique<telemetry::TopicBus>()) {
  if (options.seed) config_.network.link.seed = *options.seed;
  state_.network = net::Switch(config_.network.link);

  for (std::size_t i = 0; i < config_.panels.size(); ++i) {
    const auto& pcfg = config_.panels[i];
    PanelEntry panel{pcfg.id, static_cast<int>(i + 1), pcfg.form_factor, {}};
    auto add = [&](const PlcConfig& cfg) {
      PlcEntry entry{build_plc(cfg), i, pcfg.id + "/" + cfg.id, {}, 0, 0};
      entry.port = state_.network.attach({entry.endpoint, net::EndpointKind::plc});
      endpoint_index_.emplace(entry.endpoint, state_.plcs.size());
      panel.plcs.push_back(state_.plcs.size());
      for (const auto& p : cfg.points) bus_->register_point(std::to_string(panel.index), cfg.id, p.name);
      state_.plcs.push_back(std::move(entry));
    };
    add(pcfg.master);
    for (const auto& s : pcfg.slaves) add(s);
    panels_.push_back(std::move(panel));
  }

  auto attach = [&](std::string_view id, net::EndpointKind kind) {
    state_.ports.emplace(std::string(id), state_.network.attach({std::string(id), kind}));
    state_.inboxes.emplace(std::string(id), std::deque<net::Delivery>{});
  };
  attach(controller_endpoint, net::EndpointKind::controller);
  attach(hmi_endpoint, net::EndpointKind::hmi);
  if (config_.network.attacker) attach(attacker_endpoint, net::EndpointKind::attacker);

  if (options.game) state_.game.emplace(std::move(*options.game), options.player, 0);

  state_.published.resize(state_.plcs.size());
  publish_all(0);
  initial_ = state_;
  initial_retained_ = bus_->retained();
}

void Testbed::publish_all(std::int64_t ts) {
  for (std::size_t i = 0; i < state_.plcs.size(); ++i) {
    const auto& entry = state_.plcs[i];
    const auto panel = std::to_string(panels_[entry.panel].index);
    auto& last = state_.published[i];
    last.clear();
    for (const auto& [name, value] : entry.plc.image().values()) {
      bus_->publish_point_update(panel, entry.plc.id(), name, value, ts);
      last.push_back(value);
    }
  }
}

void Testbed::require_live() const {
  if (torn_down_) throw Error(ErrorKind::lifecycle, "testbed has been torn down");
}

void Testbed::run(std::int64_t duration_ms) {
  require_live();
  if (duration_ms < 0 || duration_ms % config_.tick_ms != 0)
    throw Error(ErrorKind::validation, "run duration must be a non-negative multiple of " +
                                           std::to_string(config_.tick_ms) + " ms");
  for (std::int64_t t = 0; t < duration_ms; t += config_.tick_ms) tick();
}

void Testbed::tick() {
  require_live();
  state_.now_ms += config_.tick_ms;
  std::vector<std::size_t> scanned;
  phase_stimuli();
  phase_physics();
  phase_scans(scanned);
  phase_network();
  phase_telemetry(scanned);
  phase_game();
}

void Testbed::reset() {
  require_live();
  state_ = initial_;
  bus_->restore_retained(initial_retained_);
}

void Testbed::teardown() { torn_down_ = true; }

void Testbed::phase_stimuli() {
  const auto& stimuli = config_.stimuli;
  while (state_.next_stimulus < stimuli.size() && stimuli[state_.next_stimulus].t_ms <= state_.now_ms) {
    const auto& ev = stimuli[state_.next_stimulus++];
    set_stimulus(ev.panel, ev.plc, ev.point, ev.value);
  }
}

void Testbed::phase_physics() {
  const double dt_s = static_cast<double>(config_.tick_ms) / 1000.0;
  for (auto& entry : state_.plcs) entry.plc.step_physics(dt_s);
}

void Testbed::phase_scans(std::vector<std::size_t>& scanned) {
  for (std::size_t i = 0; i < state_.plcs.size(); ++i) {
    auto& plc = state_.plcs[i].plc;
    if (state_.now_ms % plc.scan_ms() != 0) continue;
    plc.scan_cycle(plc.scan_ms(), state_.now_ms);
    scanned.push_back(i);
  }
}

void Testbed::phase_network() {
  auto& net = state_.network;
  const auto handler = [this](const net::Delivery& d) { deliver(d); };
  // Bring the switch clock to now first so this tick's sends carry its timestamp.
  net.advance_to(state_.now_ms, handler);
  if (config_.supervisor.enabled && state_.now_ms % config_.supervisor.poll_ms == 0) {
    const auto& port = state_.ports.at(std::string(controller_endpoint));
    for (const auto& entry : state_.plcs) {
      const auto& store = entry.plc.store();
      modbus::Frame frame;
      frame.transaction_id = state_.supervisor_txn;
      state_.supervisor_txn = static_cast<std::uint16_t>((state_.supervisor_txn + 1) & 0x7FFF);
      const auto quantity = [](std::size_t n) { return static_cast<std::uint16_t>(std::min<std::size_t>(n, 125)); };
      if (store.size(plc::Table::input_registers) > 0)
        frame.pdu = modbus::read_request(modbus::FunctionCode::read_input_registers, 0,
                                         quantity(store.size(plc::Table::input_registers)));
      else if (store.size(plc::Table::discrete_inputs) > 0)
        frame.pdu = modbus::read_request(modbus::FunctionCode::read_discrete_inputs, 0,
                                         static_cast<std::uint16_t>(store.size(plc::Table::discrete_inputs)));
      else
        continue;
      net.send_frame(port, entry.endpoint, modbus::encode_frame(frame));
    }
  }

  auto& inj = state_.injections;
  std::size_t n = 0;
  while (n < inj.size() && inj[n].t_ms <= state_.now_ms) {
    auto& item = inj[n++];
    const auto port = state_.ports.find(item.src);
    if (port == state_.ports.end()) continue;
    if (item.src == attacker_endpoint)
      net.inject(port->second, item.dst, std::move(item.payload));
    else
      net.send_frame(port->second, item.dst, std::move(item.payload));
  }
  inj.erase(inj.begin(), inj.begin() + static_cast<std::ptrdiff_t>(n));

  net.advance_to(state_.now_ms, handler);
}

void Testbed::deliver(const net::Delivery& d) {
  if (const auto idx = plc_by_endpoint(d.dst)) {
    auto& entry = state_.plcs[*idx];
    const auto reply = modbus::serve_datagram(entry.plc.store(), d.payload);
    ++entry.frames_served;
    if (reply.malformed) ++entry.malformed_frames;
    if (reply.response && state_.network.attached(d.src))
      state_.network.send_frame(entry.port, d.src, *reply.response);
    return;
  }
  const auto inbox = state_.inboxes.find(d.dst);
  if (inbox == state_.inboxes.end()) return;
  inbox->second.push_back(d);
  if (inbox->second.size() > inbox_capacity) inbox->second.pop_front();
  if (hook_) hook_(d);
}

void Testbed::phase_telemetry(const std::vector<std::size_t>& scanned) {
  for (const auto i : scanned) {
    const auto& entry = state_.plcs[i];
    const auto panel = std::to_string(panels_[entry.panel].index);
    auto& last = state_.published[i];
    std::size_t k = 0;
    for (const auto& [name, value] : entry.plc.image().values()) {
      if (!(last[k] == value)) {
        bus_->publish_point_update(panel, entry.plc.id(), name, value, state_.now_ms);
        last[k] = value;
      }
      ++k;
    }
  }
}

void Testbed::phase_game() {
  const auto& log = state_.network.capture_log();
  const std::span<const net::CaptureRecord> recent(log.data() + state_.capture_cursor,
                                                   log.size() - state_.capture_cursor);
  state_.capture_cursor = log.size();
  if (!state_.game) return;
  const auto lookup = [this](const training::PointRef& ref) { return read_point(ref.panel, ref.plc, ref.point); };
  const auto fired = state_.game->evaluate(lookup, recent, state_.now_ms);
  for (const auto& id : fired) {
    const auto* level = state_.game->spec().find(id);
    if (level == nullptr || level->channel.kind != training::FlagChannel::Kind::epaper) continue;
    const auto panel = panel_index(level->channel.panel);
    if (!panel) continue;
    for (const auto idx : panels_[*panel].plcs) {
      auto& entry = state_.plcs[idx];
      if (entry.plc.id() == level->channel.plc) entry.plc.devices().set_epaper_text(level->channel.device, level->flag);
    }
  }
}

std::optional<std::size_t> Testbed::panel_index(std::string_view ref) const {
  for (std::size_t i = 0; i < panels_.size(); ++i)
    if (panels_[i].id == ref) return i;
  int n = 0;
  const auto [ptr, ec] = std::from_chars(ref.data(), ref.data() + ref.size(), n);
  if (ec == std::errc{} && ptr == ref.data() + ref.size() && n >= 1 && static_cast<std::size_t>(n) <= panels_.size())
    return static_cast<std::size_t>(n - 1);
  return std::nullopt;
}

const PlcEntry* Testbed::plc_at(std::size_t panel, std::string_view id) const {
  for (const auto idx : panels_[panel].plcs)
    if (state_.plcs[idx].plc.id() == id) return &state_.plcs[idx];
  return nullptr;
}

const PlcEntry* Testbed::find_plc(std::string_view panel, std::string_view plc) const {
  const auto p = panel_index(panel);
  return p ? plc_at(*p, plc) : nullptr;
}

std::optional<std::size_t> Testbed::plc_by_endpoint(std::string_view id) const {
  const auto it = endpoint_index_.find(id);
  if (it == endpoint_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> Testbed::resolve_endpoint(std::string_view ref) const {
  if (state_.network.attached(ref)) return std::string(ref);
  if (const auto slash = ref.find('/'); slash != std::string_view::npos) {
    if (const auto* e = find_plc(ref.substr(0, slash), ref.substr(slash + 1))) return e->endpoint;
    return std::nullopt;
  }
  std::optional<std::string> found;
  for (const auto& entry : state_.plcs) {
    if (entry.plc.id() != ref) continue;
    if (found) return std::nullopt;
    found = entry.endpoint;
  }
  return found;
}

std::optional<SignalValue> Testbed::read_point(std::string_view panel, std::string_view plc,
                                               std::string_view point) const {
  const auto* entry = find_plc(panel, plc);
  if (entry == nullptr || !entry->plc.image().contains(point)) return std::nullopt;
  return entry->plc.image().at(point);
}

PointWriteResult Testbed::set_stimulus(std::string_view panel, std::string_view plc, std::string_view point,
                                       const SignalValue& value) {
  require_live();
  const auto p = panel_index(panel);
  if (!p) return PointWriteResult::unknown_panel;
  const auto* entry = plc_at(*p, plc);
  if (entry == nullptr) return PointWriteResult::unknown_plc;
  auto& target = state_.plcs[static_cast<std::size_t>(entry - state_.plcs.data())];
  switch (target.plc.set_stimulus(point, value)) {
    case plc::WriteOutcome::ok: return PointWriteResult::ok;
    case plc::WriteOutcome::unknown_point: return PointWriteResult::unknown_point;
    case plc::WriteOutcome::not_writable: return PointWriteResult::not_writable;
    case plc::WriteOutcome::type_mismatch: return PointWriteResult::type_mismatch;
  }
  return PointWriteResult::unknown_point;
}

void Testbed::send(std::string_view src, std::string_view dst, Bytes payload) {
  require_live();
  const auto port = state_.ports.find(src);
  if (port == state_.ports.end())
    throw Error(ErrorKind::routing, "endpoint \"" + std::string(src) + "\" is not attached");
  const auto target = resolve_endpoint(dst);
  if (!target) throw Error(ErrorKind::routing, "unknown destination \"" + std::string(dst) + "\"");
  if (src == attacker_endpoint)
    state_.network.inject(port->second, *target, std::move(payload));
  else
    state_.network.send_frame(port->second, *target, std::move(payload));
}

void Testbed::schedule_injection(std::int64_t t_ms, std::string src, std::string dst, Bytes payload) {
  require_live();
  if (!state_.ports.contains(src)) throw Error(ErrorKind::routing, "endpoint \"" + src + "\" is not attached");
  const auto target = resolve_endpoint(dst);
  if (!target) throw Error(ErrorKind::routing, "unknown destination \"" + dst + "\"");
  Injection item{t_ms, state_.injection_order++, std::move(src), *target, std::move(payload)};
  auto& inj = state_.injections;
  const auto pos = std::upper_bound(inj.begin(), inj.end(), item, [](const Injection& a, const Injection& b) {
    return a.t_ms != b.t_ms ? a.t_ms < b.t_ms : a.order < b.order;
  });
  inj.insert(pos, std::move(item));
}

std::size_t Testbed::replay(std::span<const net::CaptureRecord> records, std::optional<std::int64_t> start_ms) {
  require_live();
  if (!config_.network.attacker) throw Error(ErrorKind::routing, "attacker endpoint not provisioned");
  std::optional<std::int64_t> first;
  std::size_t count = 0;
  for (const auto& r : records) {
    if (r.src != attacker_endpoint) continue;
    if (!first) first = r.ts_ms;
    const std::int64_t t = start_ms ? *start_ms + (r.ts_ms - *first) : r.ts_ms;
    schedule_injection(t, r.src, r.dst, r.payload);
    ++count;
  }
  return count;
}

std::vector<net::Delivery> Testbed::take_inbox(std::string_view endpoint) {
  const auto it = state_.inboxes.find(endpoint);
  if (it == state_.inboxes.end()) return {};
  std::vector<net::Delivery> out(it->second.begin(), it->second.end());
  it->second.clear();
  return out;
}

std::vector<net::CaptureRecord> Testbed::capture(std::optional<std::string_view> endpoint) const {
  if (!endpoint) return state_.network.capture();
  const auto id = resolve_endpoint(*endpoint);
  if (!id) throw Error(ErrorKind::not_found, "unknown endpoint \"" + std::string(*endpoint) + "\"");
  return state_.network.capture(std::string_view(*id));
}

std::string Testbed::export_capture(std::optional<std::string_view> endpoint) const {
  std::string out;
  for (const auto& r : capture(endpoint)) {
    out += net::to_jsonl(r);
    out += '\n';
  }
  return out;
}

training::SubmitResult Testbed::submit_flag(std::string_view level, std::string_view flag) {
  require_live();
  if (!state_.game) throw Error(ErrorKind::not_found, "no game loaded");
  return state_.game->submit_flag(level, flag, state_.now_ms);
}

json Testbed::plc_json(const PlcEntry& entry) const {
  const auto& plc = entry.plc;
  json points = json::object();
  for (const auto& [name, value] : plc.image().values()) points[name] = value_json(value);
  json timers = json::object();
  for (const auto& [name, t] : plc.timers()) timers[name] = {{"accumulated_ms", t.accumulated_ms}, {"done", t.done}};
  json j;
  j["id"] = plc.id();
  j["role"] = plc::to_string(plc.role());
  j["model_label"] = plc.model_label();
  j["endpoint"] = entry.endpoint;
  j["scan_ms"] = plc.scan_ms();
  j["cycles"] = plc.cycles();
  j["image_ts_ms"] = plc.image().timestamp_ms;
  j["points"] = std::move(points);
  j["devices"] = plc.devices().to_json();
  j["timers"] = std::move(timers);
  j["tables"] = plc.store().digest();
  return j;
}

json Testbed::panels_json() const {
  json panels = json::array();
  for (const auto& panel : panels_) {
    json plcs = json::array();
    for (const auto idx : panel.plcs) plcs.push_back(plc_json(state_.plcs[idx]));
    panels.push_back({{"id", panel.id},
                      {"index", panel.index},
                      {"form_factor", to_string(panel.form_factor)},
                      {"plcs", std::move(plcs)}});
  }
  return panels;
}

json Testbed::snapshot() const {
  json j;
  j["scenario"] = config_.name;
  j["clock"] = {{"now_ms", state_.now_ms}, {"tick_ms", config_.tick_ms}, {"mode", to_string(config_.mode)}};
  j["panels"] = panels_json();
  json endpoints = json::array();
  for (const auto& e : state_.network.topology()) endpoints.push_back({{"id", e.id}, {"kind", net::to_string(e.kind)}});
  j["network"] = {{"endpoints", std::move(endpoints)},
                  {"in_flight", state_.network.in_flight()},
                  {"captured", state_.network.capture_log().size()},
                  {"pending_injections", state_.injections.size()}};
  j["game"] = state_.game ? state_.game->to_json() : json(nullptr);
  return j;
}

std::string Testbed::digest() const { return digest_hex(snapshot().dump()); }
std::string Testbed::state_digest() const { return digest_hex(panels_json().dump()); }

std::uint64_t Testbed::scans_total() const {
  std::uint64_t n = 0;
  for (const auto& e : state_.plcs) n += e.plc.cycles();
  return n;
}

std::uint64_t Testbed::missed_scans() const {
  std::uint64_t missed = 0;
  for (const auto& e : state_.plcs) {
    const auto expected = static_cast<std::uint64_t>(state_.now_ms / e.plc.scan_ms());
    if (expected > e.plc.cycles()) missed += expected - e.plc.cycles();
  }
  return missed;
}

}  // namespace k4i::orchestrator
