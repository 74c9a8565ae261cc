// k4i: run a testbed, or talk to a running one over REST and the Modbus bridges.
//
// Exit codes: 0 success, 1 domain error, 2 usage error (bad flags, missing file).

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "k4i/error.hpp"
#include "k4i/hex.hpp"
#include "k4i/modbus/client.hpp"
#include "k4i/modbus/codec.hpp"
#include "k4i/modbus/tcp.hpp"
#include "k4i/orchestrator/host.hpp"
#include "k4i/orchestrator/scenario.hpp"
#include "k4i/orchestrator/testbed.hpp"
#include "k4i/telemetry/http_server.hpp"
#include "k4i/telemetry/rest.hpp"

namespace {

using nlohmann::json;
namespace orch = k4i::orchestrator;

struct Exit {
  int code;
  std::string message;
};

[[noreturn]] void fail(int code, std::string message) { throw Exit{code, std::move(message)}; }

std::atomic<bool> interrupted{false};
extern "C" void on_signal(int) { interrupted = true; }

// ---- REST client -----------------------------------------------------------

struct Remote {
  std::string host = "127.0.0.1";
  int port = 8080;
};

Remote parse_remote(std::string text) {
  if (text.starts_with("http://")) text = text.substr(7);
  while (!text.empty() && text.back() == '/') text.pop_back();
  Remote r;
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) {
    if (!text.empty()) r.host = text;
    return r;
  }
  r.host = text.substr(0, colon);
  try {
    r.port = std::stoi(text.substr(colon + 1));
  } catch (const std::exception&) {
    fail(2, "bad endpoint \"" + text + "\"");
  }
  return r;
}

struct HttpReply {
  int status = 0;
  std::string body;
};

class Rest {
 public:
  explicit Rest(Remote remote) : remote_(std::move(remote)), client_(remote_.host, remote_.port) {
    client_.set_connection_timeout(3);
    client_.set_read_timeout(10);
  }

  HttpReply get(const std::string& path) { return wrap(client_.Get(path), path); }
  HttpReply post(const std::string& path, const std::string& body, const char* type = "application/json") {
    return wrap(client_.Post(path, body, type), path);
  }
  [[nodiscard]] const Remote& remote() const { return remote_; }

 private:
  HttpReply wrap(const httplib::Result& res, const std::string& path) {
    if (!res)
      fail(1, "cannot reach testbed at " + remote_.host + ":" + std::to_string(remote_.port) + " (" +
                  httplib::to_string(res.error()) + ")");
    (void)path;
    return {res->status, res->body};
  }

  Remote remote_;
  httplib::Client client_;
};

json parse_body(const HttpReply& r) {
  try {
    return json::parse(r.body);
  } catch (const json::parse_error&) {
    fail(1, "testbed sent an unreadable response");
  }
}

std::string error_of(const HttpReply& r) {
  try {
    const auto j = json::parse(r.body);
    if (j.is_object() && j.contains("error")) return j["error"].get<std::string>();
  } catch (const json::parse_error&) {
  }
  return "HTTP " + std::to_string(r.status);
}

json expect_ok(const HttpReply& r) {
  if (r.status != 200) fail(1, error_of(r));
  return parse_body(r);
}

std::string url_escape(const std::string& s) {
  std::ostringstream out;
  for (const unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') out << c;
    else out << '%' << std::uppercase << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(c);
  }
  return out.str();
}

std::string point_path(const std::string& panel, const std::string& plc) {
  return "/api/v1/panels/" + url_escape(panel) + "/plcs/" + url_escape(plc) + "/points";
}

// ---- helpers ---------------------------------------------------------------

std::string slurp(const std::string& path) {
  try {
    return orch::read_text_file(path);
  } catch (const k4i::Error& e) {
    fail(2, e.what());
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(1, "cannot write " + path);
  out << text;
}

void print_issues(const k4i::ValidationError& e) {
  std::cerr << "k4i: validation failed:\n";
  for (const auto& issue : e.issues())
    std::cerr << "  " << (issue.path.empty() ? "/" : issue.path) << ": " << issue.message << "\n";
}

json parse_value_token(const std::string& token) {
  if (token == "true" || token == "on") return true;
  if (token == "false" || token == "off") return false;
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used == token.size()) return v;
  } catch (const std::exception&) {
  }
  fail(2, "value must be true, false, on, off or a number: \"" + token + "\"");
}

// ---- run -------------------------------------------------------------------

struct RunArgs {
  std::string scenario;
  std::string game;
  std::optional<std::int64_t> fast_ms;
  bool realtime = false;
  std::optional<std::int64_t> duration_ms;
  std::optional<std::uint64_t> seed;
  std::optional<int> rest_port;
  std::string rest_host = "127.0.0.1";
  bool no_rest = false;
  std::optional<int> bridge_base;
  bool no_bridges = false;
  std::string capture_out;
  std::string events_out;
  std::string snapshot_out;
  bool json_out = false;
};

int cmd_run(const RunArgs& a) {
  const std::string text = slurp(a.scenario);
  orch::ScenarioConfig config;
  std::optional<k4i::training::GameSpec> game;
  try {
    config = orch::load_scenario(text, std::filesystem::path(a.scenario).parent_path());
  } catch (const k4i::ValidationError& e) {
    print_issues(e);
    return 1;
  }
  std::optional<std::filesystem::path> game_path;
  if (!a.game.empty()) game_path = a.game;
  else if (config.game) game_path = *config.game;
  if (game_path) {
    const std::string game_text = slurp(game_path->string());
    try {
      game = orch::load_game_for(config, game_text);
    } catch (const k4i::ValidationError& e) {
      print_issues(e);
      return 1;
    }
  }

  const bool realtime = a.fast_ms ? false : (a.realtime || config.mode == orch::ClockMode::realtime);
  auto options = orch::host_options_for(config);
  options.realtime = realtime;
  if (realtime) {
    if (a.bridge_base) {
      options.bridges = true;
      options.bridge_base_port = *a.bridge_base;
    }
  } else {
    options.bridges = a.bridge_base.has_value();
    if (a.bridge_base) options.bridge_base_port = *a.bridge_base;
  }
  if (a.no_bridges) options.bridges = false;
  const bool serve_rest = !a.no_rest && (realtime || a.rest_port.has_value());
  const int rest_port = a.rest_port.value_or(8080);

  orch::InstantiateOptions inst;
  inst.seed = a.seed;
  inst.game = std::move(game);
  auto testbed = std::make_unique<orch::Testbed>(std::move(config), std::move(inst));
  const auto& cfg = testbed->config();
  const std::size_t plc_total = testbed->plcs().size();
  const auto endpoints = testbed->endpoints();

  std::unique_ptr<orch::Host> host;
  std::unique_ptr<k4i::telemetry::RestServer> rest;
  try {
    host = std::make_unique<orch::Host>(std::move(testbed), options);
    if (serve_rest) {
      rest = std::make_unique<k4i::telemetry::RestServer>(
          k4i::telemetry::RestApi(k4i::telemetry::host_executor(*host), host->bridges()), host->bus());
      rest->start(a.rest_host, rest_port);
    }
  } catch (const k4i::Error& e) {
    std::cerr << "k4i: " << e.what() << "\n";
    return 1;
  }

  std::ostream& table = a.json_out ? std::cerr : std::cout;
  table << "scenario " << cfg.name << ": " << cfg.panels.size() << " panels, " << plc_total << " PLCs, tick "
        << cfg.tick_ms << " ms, " << (realtime ? "realtime" : "fast") << "\n";
  table << std::left << std::setw(28) << "ENDPOINT" << std::setw(12) << "KIND" << "BRIDGE\n";
  for (const auto& e : endpoints) {
    std::string bridge = "-";
    for (const auto& b : host->bridges())
      if (b.endpoint == e.id) bridge = options.bridge_host + ":" + std::to_string(b.port);
    table << std::left << std::setw(28) << e.id << std::setw(12) << k4i::net::to_string(e.kind) << bridge << "\n";
  }
  if (rest) table << "REST http://" << a.rest_host << ":" << rest->port() << "/api/v1\n";
  table << std::flush;

  const auto wall_start = std::chrono::steady_clock::now();
  host->start();
  int code = 0;
  try {
    if (!realtime) {
      const std::int64_t duration = a.fast_ms.value_or(a.duration_ms.value_or(60000));
      host->advance(duration);
    } else {
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      const std::int64_t until = a.duration_ms.value_or(-1);
      while (!interrupted) {
        const auto now = host->query([](orch::Testbed& t) { return t.now_ms(); });
        if (until >= 0 && now >= until) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
      }
    }
  } catch (const k4i::Error& e) {
    std::cerr << "k4i: " << e.what() << "\n";
    code = 1;
  }
  if (rest) rest->stop();
  const auto wall_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - wall_start).count();

  host->stop();
  const auto summary = host->query([&](orch::Testbed& t) {
    json s;
    s["scenario"] = t.config().name;
    s["plcs"] = t.plcs().size();
    s["sim_ms"] = t.now_ms();
    s["wall_ms"] = wall_ms;
    s["scans"] = t.scans_total();
    s["missed_scans"] = t.missed_scans();
    s["frames"] = t.network().capture_log().size();
    s["digest"] = t.digest();
    s["state_digest"] = t.state_digest();
    if (t.has_game()) s["score"] = t.game()->score();
    if (!a.capture_out.empty()) write_file(a.capture_out, t.export_capture());
    if (!a.events_out.empty()) write_file(a.events_out, t.has_game() ? t.game()->export_events() : "");
    if (!a.snapshot_out.empty()) write_file(a.snapshot_out, t.snapshot().dump(2) + "\n");
    return s;
  });
  json out = summary;
  out["overruns"] = host->overruns();

  if (a.json_out) {
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "summary: " << out["plcs"].get<std::size_t>() << " PLCs stepped, " << out["scans"] << " scans, "
              << out["missed_scans"] << " missed, " << out["sim_ms"] << " ms simulated in " << wall_ms
              << " ms wall\n";
    std::cout << "state digest " << out["state_digest"].get<std::string>() << "\n";
  }
  return code;
}

// ---- points / snapshot / capture -------------------------------------------

int cmd_points_list(Rest& rest, const std::string& panel, const std::string& plc, bool as_json) {
  const auto list = expect_ok(rest.get(point_path(panel, plc)));
  if (as_json) {
    std::cout << list.dump(2) << "\n";
    return 0;
  }
  for (const auto& p : list) {
    std::cout << std::left << std::setw(20) << p["name"].get<std::string>() << std::setw(8)
              << p["direction"].get<std::string>() << std::setw(14) << p["display"].get<std::string>();
    if (p.contains("register"))
      std::cout << p["register"]["table"].get<std::string>() << "@" << p["register"]["address"];
    std::cout << "\n";
  }
  return 0;
}

int cmd_points_get(Rest& rest, const std::string& panel, const std::string& plc, const std::string& point,
                   bool as_json) {
  const auto p = expect_ok(rest.get(point_path(panel, plc) + "/" + url_escape(point)));
  if (as_json) std::cout << p.dump(2) << "\n";
  else std::cout << p["display"].get<std::string>() << "\n";
  return 0;
}

int cmd_points_set(Rest& rest, const std::string& panel, const std::string& plc, const std::string& point,
                   const std::string& token) {
  const json body{{"value", parse_value_token(token)}};
  const auto r = rest.post(point_path(panel, plc) + "/" + url_escape(point), body.dump());
  if (r.status != 200) fail(1, error_of(r));
  std::cout << point << " <- " << token << "\n";
  return 0;
}

int cmd_points_map(Rest& rest, const std::string& panel, const std::string& plc, bool as_json) {
  const auto rows = expect_ok(
      rest.get("/api/v1/panels/" + url_escape(panel) + "/plcs/" + url_escape(plc) + "/registers"));
  if (as_json) {
    std::cout << rows.dump(2) << "\n";
    return 0;
  }
  for (const auto& r : rows)
    std::cout << std::left << std::setw(20) << r["point"].get<std::string>() << std::setw(18)
              << r["table"].get<std::string>() << std::setw(6) << r["address"] << "x" << r["scale"] << "\n";
  return 0;
}

int cmd_snapshot(Rest& rest, bool as_json) {
  const auto snap = expect_ok(rest.get("/api/v1/snapshot"));
  if (as_json) {
    std::cout << snap.dump(2) << "\n";
    return 0;
  }
  std::cout << "t=" << snap["clock"]["now_ms"] << " ms  digest " << snap["digest"].get<std::string>() << "\n";
  for (const auto& panel : snap["panels"]) {
    for (const auto& plc : panel["plcs"]) {
      std::cout << panel["id"].get<std::string>() << "/" << plc["id"].get<std::string>() << "  cycles "
                << plc["cycles"] << "\n";
      for (const auto& [name, value] : plc["points"].items()) std::cout << "  " << name << " = " << value << "\n";
    }
  }
  return 0;
}

int cmd_capture_export(Rest& rest, const std::string& endpoint, const std::string& out) {
  std::string path = "/api/v1/capture";
  if (!endpoint.empty()) path += "?endpoint=" + url_escape(endpoint);
  const auto r = rest.get(path);
  if (r.status != 200) fail(1, error_of(r));
  if (out.empty()) std::cout << r.body;
  else write_file(out, r.body);
  return 0;
}

// ---- attack ---------------------------------------------------------------

struct BridgeTarget {
  std::string endpoint;
  int port = 0;
};

BridgeTarget attack_target(Rest& rest, const std::string& panel_arg, const std::string& plc_arg) {
  const auto net = expect_ok(rest.get("/api/v1/network"));
  if (!net.value("attacker", false)) fail(1, "attacker endpoint not provisioned");
  std::string panel = panel_arg;
  std::string plc = plc_arg;
  if (const auto slash = plc_arg.find('/'); slash != std::string::npos) {
    panel = plc_arg.substr(0, slash);
    plc = plc_arg.substr(slash + 1);
  }
  // Panel may be given by index.
  const auto panels = expect_ok(rest.get("/api/v1/panels"));
  std::string panel_id;
  for (const auto& p : panels)
    if (p["id"] == panel || std::to_string(p["index"].get<int>()) == panel) panel_id = p["id"].get<std::string>();
  if (panel_id.empty()) fail(1, "unknown panel \"" + panel + "\"");
  const std::string endpoint = panel_id + "/" + plc;
  for (const auto& b : net["bridges"])
    if (b["endpoint"] == endpoint) return {endpoint, b["port"].get<int>()};
  bool known = false;
  for (const auto& e : net["endpoints"])
    if (e["id"] == endpoint) known = true;
  if (!known) fail(1, "unknown PLC \"" + endpoint + "\"");
  fail(1, "no Modbus bridge is open for " + endpoint);
}

void print_response(const k4i::modbus::Frame& f, bool as_json) {
  if (as_json) {
    std::cout << json{{"transaction_id", f.transaction_id},
                      {"function", f.pdu.function},
                      {"exception", f.pdu.is_exception()},
                      {"exception_code", f.pdu.exception_code()},
                      {"pdu_hex", k4i::to_hex(f.pdu.body)},
                      {"frame_hex", k4i::to_hex(k4i::modbus::encode_frame(f))}}
                     .dump()
              << "\n";
  } else {
    std::cout << k4i::modbus::describe(f.pdu) << "\n";
  }
}

int cmd_write_coil(Rest& rest, const std::string& panel, const std::string& plc, int address,
                   const std::string& state, bool as_json) {
  if (state != "on" && state != "off") fail(2, "coil state must be on or off");
  if (address < 0 || address > 65535) fail(2, "coil address must be 0..65535");
  const auto target = attack_target(rest, panel, plc);
  try {
    k4i::modbus::TcpChannel channel(rest.remote().host, static_cast<std::uint16_t>(target.port));
    k4i::modbus::Frame req;
    req.transaction_id = 1;
    req.pdu = k4i::modbus::write_single_coil(static_cast<std::uint16_t>(address), state == "on");
    const auto reply = k4i::modbus::client_request(channel, req, 3000);
    print_response(reply, as_json);
    return reply.pdu.is_exception() ? 1 : 0;
  } catch (const k4i::Error& e) {
    fail(1, e.what());
  }
}

int cmd_raw(Rest& rest, const std::string& panel, const std::string& plc, const std::string& hex, bool as_json) {
  k4i::Bytes bytes;
  try {
    bytes = k4i::from_hex(hex);
  } catch (const k4i::Error& e) {
    fail(2, e.what());
  }
  if (bytes.empty()) fail(2, "empty frame");
  const auto target = attack_target(rest, panel, plc);
  try {
    k4i::modbus::TcpChannel channel(rest.remote().host, static_cast<std::uint16_t>(target.port));
    channel.send_raw(bytes);
    const auto reply = channel.receive(channel.now_ms() + 3000);
    if (!reply) fail(1, "no response from " + target.endpoint);
    const auto decoded = k4i::modbus::decode_frame(*reply);
    if (decoded.status != k4i::modbus::DecodeStatus::ok) {
      std::cout << k4i::to_hex(*reply) << "\n";
      return 0;
    }
    print_response(decoded.frame, as_json);
    return 0;
  } catch (const k4i::Error& e) {
    fail(1, e.what());
  }
}

int cmd_replay(Rest& rest, const std::string& file, bool as_json) {
  const std::string body = slurp(file);
  const auto net = expect_ok(rest.get("/api/v1/network"));
  if (!net.value("attacker", false)) fail(1, "attacker endpoint not provisioned");
  const auto r = expect_ok(rest.post("/api/v1/network/replay", body, "application/x-ndjson"));
  if (as_json) std::cout << r.dump() << "\n";
  else std::cout << "scheduled " << r["scheduled"] << " frames from t=" << r["start_ms"] << " ms\n";
  return 0;
}

// ---- game -------------------------------------------------------------------

int cmd_game_state(Rest& rest, bool as_json) {
  const auto r = rest.get("/api/v1/game/state");
  if (r.status != 200) fail(1, error_of(r));
  const auto s = parse_body(r);
  if (as_json) {
    std::cout << s.dump(2) << "\n";
    return 0;
  }
  std::cout << s["title"].get<std::string>() << "  score " << s["score"] << "\n";
  for (const auto& l : s["levels"]) {
    std::cout << "  [" << (l["solved"].get<bool>() ? "x" : " ") << "] " << l["id"].get<std::string>() << " ("
              << l["points"] << ") " << l["description"].get<std::string>();
    if (l.contains("flag")) std::cout << "  flag: " << l["flag"].get<std::string>();
    if (l.contains("flag_at")) std::cout << "  flag shown on " << l["flag_at"].get<std::string>();
    std::cout << "\n";
  }
  return 0;
}

int cmd_game_submit(Rest& rest, const std::string& level, const std::string& flag, bool as_json) {
  const auto r = rest.post("/api/v1/game/flags", json{{"level", level}, {"flag", flag}}.dump());
  if (r.status != 200) fail(1, error_of(r));
  const auto s = parse_body(r);
  if (as_json) std::cout << s.dump() << "\n";
  if (s["result"] == "accepted") {
    if (!as_json) std::cout << "Accepted (+" << s["points"] << ")\n";
    return 0;
  }
  if (!as_json) std::cout << "Rejected: " << s["reason"].get<std::string>() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k4i: virtual ICS training testbed"};
  app.require_subcommand(1);
  std::string endpoint_opt;
  app.add_option("--endpoint", endpoint_opt, "REST address host:port (default $K4I_ENDPOINT or 127.0.0.1:8080)");

  std::function<int()> action;
  auto rest = [&]() {
    std::string ep = endpoint_opt;
    if (ep.empty())
      if (const char* env = std::getenv("K4I_ENDPOINT")) ep = env;
    return Rest(ep.empty() ? Remote{} : parse_remote(ep));
  };

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Instantiate and run a scenario");
  run_cmd->add_option("scenario", run.scenario, "Scenario file")->required();
  run_cmd->add_option("--game", run.game, "Game file (default: the scenario's)");
  auto* fast = run_cmd->add_option("--fast", run.fast_ms, "Fast-forward this many simulated ms, then exit");
  auto* realtime = run_cmd->add_flag("--realtime", run.realtime, "Run on the wall clock");
  fast->excludes(realtime);
  run_cmd->add_option("--duration", run.duration_ms, "Stop after this many simulated ms (realtime)");
  run_cmd->add_option("--seed", run.seed, "Override the network seed");
  run_cmd->add_option("--rest-port", run.rest_port, "REST port (0 picks one; default 8080 in realtime)");
  run_cmd->add_option("--rest-host", run.rest_host, "REST bind address");
  run_cmd->add_flag("--no-rest", run.no_rest, "Do not serve REST");
  run_cmd->add_option("--bridge-base", run.bridge_base, "First Modbus bridge port (0 picks free ports)");
  run_cmd->add_flag("--no-bridges", run.no_bridges, "Do not open Modbus bridges");
  run_cmd->add_option("--capture-out", run.capture_out, "Write the network capture (JSON Lines)");
  run_cmd->add_option("--events-out", run.events_out, "Write the game event log (JSON Lines)");
  run_cmd->add_option("--snapshot-out", run.snapshot_out, "Write the final snapshot");
  run_cmd->add_flag("--json", run.json_out, "Print the summary as JSON");
  run_cmd->callback([&] { action = [&] { return cmd_run(run); }; });

  std::string panel, plc, point, value, file, out, level, flag, hex, state, capture_endpoint;
  int address = 0;
  bool as_json = false;
  std::string attack_panel = "panel-1";

  auto* points = app.add_subcommand("points", "Inspect and set points");
  points->require_subcommand(1);
  auto* pl = points->add_subcommand("list", "List a PLC's points");
  pl->add_option("panel", panel)->required();
  pl->add_option("plc", plc)->required();
  pl->add_flag("--json", as_json);
  pl->callback([&] { action = [&] {
    auto r = rest();
    return cmd_points_list(r, panel, plc, as_json);
  }; });
  auto* pg = points->add_subcommand("get", "Read one point");
  pg->add_option("panel", panel)->required();
  pg->add_option("plc", plc)->required();
  pg->add_option("point", point)->required();
  pg->add_flag("--json", as_json);
  pg->callback([&] { action = [&] {
    auto r = rest();
    return cmd_points_get(r, panel, plc, point, as_json);
  }; });
  auto* ps = points->add_subcommand("set", "Set a stimulus input (button, key switch, motion)");
  ps->add_option("panel", panel)->required();
  ps->add_option("plc", plc)->required();
  ps->add_option("point", point)->required();
  ps->add_option("value", value)->required();
  ps->callback([&] { action = [&] {
    auto r = rest();
    return cmd_points_set(r, panel, plc, point, value);
  }; });
  auto* pm = points->add_subcommand("map", "Show a PLC's Modbus register map");
  pm->add_option("panel", panel)->required();
  pm->add_option("plc", plc)->required();
  pm->add_flag("--json", as_json);
  pm->callback([&] { action = [&] {
    auto r = rest();
    return cmd_points_map(r, panel, plc, as_json);
  }; });

  auto* snap = app.add_subcommand("snapshot", "Print the full testbed state");
  snap->add_flag("--json", as_json);
  snap->callback([&] { action = [&] {
    auto r = rest();
    return cmd_snapshot(r, as_json);
  }; });

  auto* capture = app.add_subcommand("capture", "Network capture");
  capture->require_subcommand(1);
  auto* cexp = capture->add_subcommand("export", "Export the capture as JSON Lines");
  cexp->add_option("--endpoint", capture_endpoint, "Only frames to or from this endpoint");
  cexp->add_option("--out", out, "Output file (default stdout)");
  cexp->callback([&] { action = [&] {
    auto r = rest();
    return cmd_capture_export(r, capture_endpoint, out);
  }; });

  auto* attack = app.add_subcommand("attack", "Inject traffic from the attacker endpoint");
  attack->require_subcommand(1);
  auto* wc = attack->add_subcommand("write-coil", "Send Write Single Coil through the PLC's bridge");
  wc->add_option("plc", plc)->required();
  wc->add_option("address", address)->required();
  wc->add_option("state", state, "on or off")->required();
  wc->add_option("--panel", attack_panel);
  wc->add_flag("--json", as_json);
  wc->callback([&] { action = [&] {
    auto r = rest();
    return cmd_write_coil(r, attack_panel, plc, address, state, as_json);
  }; });
  auto* raw = attack->add_subcommand("raw", "Send a raw Modbus TCP frame given in hex");
  raw->add_option("plc", plc)->required();
  raw->add_option("hex", hex)->required();
  raw->add_option("--panel", attack_panel);
  raw->add_flag("--json", as_json);
  raw->callback([&] { action = [&] {
    auto r = rest();
    return cmd_raw(r, attack_panel, plc, hex, as_json);
  }; });
  auto* rp = attack->add_subcommand("replay", "Replay the attacker frames of a capture");
  rp->add_option("capture", file)->required();
  rp->add_flag("--json", as_json);
  rp->callback([&] { action = [&] {
    auto r = rest();
    return cmd_replay(r, file, as_json);
  }; });

  auto* game = app.add_subcommand("game", "Play the hosted game");
  game->require_subcommand(1);
  auto* gs = game->add_subcommand("state", "Show revealed levels and score");
  gs->add_flag("--json", as_json);
  gs->callback([&] { action = [&] {
    auto r = rest();
    return cmd_game_state(r, as_json);
  }; });
  auto* sub = game->add_subcommand("submit", "Submit a flag");
  sub->add_option("level", level)->required();
  sub->add_option("flag", flag)->required();
  sub->add_flag("--json", as_json);
  sub->callback([&] { action = [&] {
    auto r = rest();
    return cmd_game_submit(r, level, flag, as_json);
  }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    return action ? action() : 2;
  } catch (const Exit& e) {
    if (!e.message.empty()) std::cerr << "k4i: " << e.message << "\n";
    return e.code;
  } catch (const k4i::ValidationError& e) {
    print_issues(e);
    return 1;
  } catch (const k4i::Error& e) {
    std::cerr << "k4i: " << e.what() << "\n";
    return 1;
  }
}
