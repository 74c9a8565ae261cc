#include <doctest.h>

#include <map>

#include <nlohmann/json.hpp>

#include "k4i/error.hpp"
#include "k4i/hex.hpp"
#include "k4i/modbus/codec.hpp"
#include "k4i/orchestrator/host.hpp"
#include "support.hpp"

using namespace k4i;
using namespace k4i::orchestrator;
using nlohmann::json;

namespace {

std::map<std::string, int> type_counts(const std::vector<devices::Device>& devs) {
  std::map<std::string, int> out;
  for (const auto& d : devs) ++out[std::string(devices::device_type_name(d.model))];
  return out;
}

std::string scenario_with(const std::string& panels, const std::string& extra = "") {
  return R"({"schema":"k4i-scenario/1","name":"t","clock":{"tick_ms":10,"mode":"fast"},"panels":)" + panels + extra +
         "}";
}

std::vector<Issue> issues_of(const std::string& text) {
  try {
    (void)load_scenario(text, test::data_path("scenarios"));
  } catch (const ValidationError& e) {
    return e.issues();
  }
  return {};
}

bool has_issue(const std::vector<Issue>& issues, const std::string& needle) {
  for (const auto& i : issues)
    if ((i.path + ": " + i.message).find(needle) != std::string::npos) return true;
  return false;
}

Bytes write_coil_frame(std::uint16_t txn, std::uint16_t addr, bool on) {
  modbus::Frame f;
  f.transaction_id = txn;
  f.pdu = modbus::write_single_coil(addr, on);
  return modbus::encode_frame(f);
}

}  // namespace

TEST_CASE("default panel inventory") {
  const auto cfg = load_scenario_file(test::data_path("scenarios/default-panel.json"));
  REQUIRE(cfg.panels.size() == 1);
  const auto& panel = cfg.panels[0];
  CHECK(panel.master.role == plc::PlcRole::master);
  CHECK(type_counts(panel.master.devices) ==
        std::map<std::string, int>{{"led", 3}, {"button", 2}, {"key_switch", 1}, {"motion", 2}, {"motor", 1}});
  REQUIRE(panel.slaves.size() == 2);
  for (const auto& s : panel.slaves) {
    CHECK(type_counts(s.devices) == std::map<std::string, int>{{"led", 3},
                                                               {"button", 2},
                                                               {"heater", 1},
                                                               {"thermometer", 1},
                                                               {"light_sensor", 1},
                                                               {"seven_segment", 1},
                                                               {"epaper", 1}});
  }
}

TEST_CASE("scenario validation") {
  CHECK(has_issue(issues_of(scenario_with("[]")), "/panels"));
  const auto dup = issues_of(scenario_with(
      R"([{"id":"panel-1","master":{"id":"master"},"slaves":[{"id":"slave-1"},{"id":"slave-1"}]}])"));
  CHECK(has_issue(dup, "duplicate"));
  CHECK(has_issue(dup, "slave-1"));
  const auto many = issues_of(R"({"schema":"k4i-scenario/0","clock":{"tick_ms":0},"panels":[{"id":"a/b"}]})");
  CHECK(many.size() >= 3);
  const auto bad_prog = issues_of(scenario_with(
      R"([{"id":"p","master":{"id":"master","program_text":"LD nope\nST led1"},"slaves":[]}])"));
  CHECK(has_issue(bad_prog, "line 1"));
  const auto motor_on_slave = issues_of(scenario_with(
      R"([{"id":"p","master":{"id":"master"},"slaves":[{"id":"s","devices":[{"id":"m","type":"motor"}]}]}])"));
  CHECK_FALSE(motor_on_slave.empty());
  const auto scan = issues_of(scenario_with(R"([{"id":"p","master":{"id":"master","scan_ms":15},"slaves":[]}])"));
  CHECK(has_issue(scan, "scan_ms"));
  const auto stim = issues_of(scenario_with(R"([{"id":"p","master":{"id":"master"},"slaves":[]}])",
                                            R"(,"stimuli":[{"t_ms":10,"panel":"p","plc":"master","point":"led1","value":true}])"));
  CHECK_FALSE(stim.empty());
  CHECK(issues_of(scenario_with(R"([{"id":"p","master":{"id":"master"},"slaves":[]}])")).empty());
  try {
    (void)load_scenario_file("/nonexistent/scenario.json");
    FAIL("expected not_found");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_found);
  }
}

TEST_CASE("instantiate: snapshot lists exactly the configured points at initial values") {
  auto tb = test::load_testbed("default-panel.json");
  const auto& cfg = tb->config();
  const auto snap = tb->snapshot();
  const auto& panels = snap["panels"];
  REQUIRE(panels.size() == 1);
  std::vector<const PlcConfig*> configured{&cfg.panels[0].master};
  for (const auto& s : cfg.panels[0].slaves) configured.push_back(&s);
  REQUIRE(panels[0]["plcs"].size() == configured.size());
  for (std::size_t i = 0; i < configured.size(); ++i) {
    const auto& pj = panels[0]["plcs"][i];
    const devices::DeviceBank fresh(configured[i]->devices);
    CHECK(pj["id"] == configured[i]->id);
    CHECK(pj["points"].size() == configured[i]->points.size());
    for (const auto& p : configured[i]->points) {
      REQUIRE(pj["points"].contains(p.name));
      const auto v = fresh.read(*devices::parse_binding(p.binding));
      if (v.is_digital()) CHECK(pj["points"][p.name] == v.as_bool());
      else CHECK(pj["points"][p.name] == v.as_real());
    }
  }
  CHECK(devices::format_signal(*tb->read_point("panel-1", "slave-1", "temp1")) == "25.00 °C");
  CHECK(tb->read_point("1", "slave-2", "light1")->as_real() == 100.0);
  CHECK_FALSE(tb->read_point("1", "slave-2", "nope"));
  CHECK_FALSE(tb->read_point("2", "slave-2", "led1"));
}

TEST_CASE("sixteen panels attach every PLC") {
  auto tb = test::load_testbed("classroom-16.json");
  const auto& cfg = tb->config();
  CHECK(cfg.panels.size() == 16);
  std::size_t configured = 0;
  for (const auto& p : cfg.panels) configured += p.plc_count();
  CHECK(tb->plcs().size() == configured);
  std::size_t plc_endpoints = 0, masters = 0;
  for (const auto& e : tb->endpoints()) plc_endpoints += e.kind == net::EndpointKind::plc;
  for (const auto& e : tb->plcs()) masters += e.plc.role() == plc::PlcRole::master;
  CHECK(plc_endpoints == configured);
  CHECK(masters == 16);
  CHECK(tb->panels()[15].index == 16);
}

TEST_CASE("run preconditions and composition") {
  auto a = test::load_testbed("default-panel.json");
  auto b = test::load_testbed("default-panel.json");
  const auto d0 = a->digest();
  a->run(0);
  CHECK(a->digest() == d0);
  CHECK_THROWS_AS(a->run(15), Error);
  CHECK_THROWS_AS(a->run(-10), Error);
  a->run(1000);
  a->run(1000);
  b->run(2000);
  CHECK(a->now_ms() == 2000);
  CHECK(a->digest() == b->digest());
  CHECK(a->export_capture() == b->export_capture());
  CHECK(a->scans_total() == 3 * 40);
  CHECK(a->missed_scans() == 0);

  a->reset();
  CHECK(a->digest() == d0);
  CHECK(a->now_ms() == 0);

  a->teardown();
  try {
    a->run(10);
    FAIL("expected lifecycle error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::lifecycle);
  }
}

TEST_CASE("identical runs give identical snapshots; a different seed changes the capture") {
  auto a = test::load_testbed("classroom-16.json");
  auto b = test::load_testbed("classroom-16.json");
  auto c = test::load_testbed("classroom-16.json", true, 99);
  for (auto* t : {a.get(), b.get(), c.get()}) t->run(5000);
  CHECK(a->snapshot() == b->snapshot());
  CHECK(a->export_capture() == b->export_capture());
  CHECK(a->export_capture() != c->export_capture());
}

TEST_CASE("injected write-coil changes the victim LED at the next scan") {
  auto tb = test::load_testbed("default-panel.json");
  tb->run(100);
  tb->send(attacker_endpoint, "panel-1/slave-1", write_coil_frame(0x1234, 0, true));
  tb->tick();  // delivered at 110, scan at 150
  CHECK_FALSE(tb->read_point("1", "slave-1", "led1")->as_bool());
  tb->run(40);
  CHECK(tb->read_point("1", "slave-1", "led1")->as_bool());
  const auto inbox = tb->take_inbox(attacker_endpoint);
  REQUIRE(inbox.size() == 1);
  const auto r = modbus::decode_frame(inbox[0].payload);
  CHECK(r.frame.transaction_id == 0x1234);
  CHECK(r.frame.pdu == modbus::write_single_coil(0, true));
  tb->run(1000);
  CHECK(tb->read_point("1", "slave-1", "led1")->as_bool());  // latched by the program
}

TEST_CASE("malformed injection gets an exception, not a crash") {
  auto tb = test::load_testbed("default-panel.json", false);
  tb->send(attacker_endpoint, "slave-2", from_hex("000500000003010500"));
  tb->send(attacker_endpoint, "slave-2", from_hex("deadbeef"));
  tb->run(50);
  const auto inbox = tb->take_inbox(attacker_endpoint);
  REQUIRE(inbox.size() == 1);
  CHECK(modbus::decode_frame(inbox[0].payload).frame.pdu.function == 0x85);
  try {
    tb->send(attacker_endpoint, "panel-1/slave-9", from_hex("00"));
    FAIL("expected routing error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::routing);
  }
}

TEST_CASE("stimulus writes and direction rules") {
  auto tb = test::load_testbed("default-panel.json");
  CHECK(tb->set_stimulus("1", "master", "key_switch", devices::SignalValue::digital(true)) == PointWriteResult::ok);
  CHECK(tb->set_stimulus("1", "slave-1", "temp1", devices::SignalValue::analog(50, devices::Unit::celsius)) ==
        PointWriteResult::not_writable);
  CHECK(tb->set_stimulus("9", "master", "key_switch", devices::SignalValue::digital(true)) ==
        PointWriteResult::unknown_panel);
  CHECK(tb->set_stimulus("1", "nobody", "key_switch", devices::SignalValue::digital(true)) ==
        PointWriteResult::unknown_plc);
  tb->run(50);
  CHECK(tb->read_point("1", "master", "led1")->as_bool());
}

TEST_CASE("replay of attacker frames reproduces the victim state") {
  auto a = test::load_testbed("default-panel.json", false);
  a->run(200);
  a->send(attacker_endpoint, "panel-1/slave-2", write_coil_frame(1, 2, true));
  a->run(300);
  a->send(attacker_endpoint, "panel-1/slave-1", write_coil_frame(2, 0, true));
  a->run(1500);
  const auto capture = net::parse_capture(a->export_capture());

  auto b = test::load_testbed("default-panel.json", false);
  CHECK(b->replay(capture) == 2);
  b->run(2000);
  CHECK(b->state_digest() == a->state_digest());

  auto no_attacker = test::load_testbed("classroom-16.json");
  CHECK_THROWS_AS(no_attacker->replay(capture), Error);
}

TEST_CASE("bridge ports: second bind of the same port is a startup error") {
  HostOptions opts;
  opts.bridges = true;
  opts.bridge_base_port = 0;
  Host first(test::load_testbed("default-panel.json"), opts);
  REQUIRE(first.bridges().size() == 3);
  CHECK(first.bridges()[0].port > 0);
  opts.bridge_base_port = first.bridges()[0].port;
  try {
    Host second(test::load_testbed("default-panel.json"), opts);
    FAIL("expected startup error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::startup);
  }
}

TEST_CASE("host runs fast-mode advances and queries on the sim thread") {
  Host host(test::load_testbed("default-panel.json"), HostOptions{});
  host.start();
  host.advance(1000);
  CHECK(host.query([](Testbed& t) { return t.now_ms(); }) == 1000);
  host.stop();
}
