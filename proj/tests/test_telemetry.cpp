#include <doctest.h>

#include <nlohmann/json.hpp>

#include "k4i/error.hpp"
#include "k4i/orchestrator/scenario.hpp"
#include "k4i/orchestrator/testbed.hpp"
#include "k4i/telemetry/bus.hpp"
#include "k4i/telemetry/rest.hpp"
#include "support.hpp"

using namespace k4i;
using namespace k4i::telemetry;
using devices::SignalValue;
using nlohmann::json;

namespace {

void register_panel(TopicBus& bus) {
  for (const char* plc : {"master", "slave-1", "slave-2"})
    for (const char* p : {"led1", "led2"}) bus.register_point("1", plc, p);
}

std::unique_ptr<orchestrator::Testbed> default_testbed() { return test::load_testbed("default-panel.json"); }

}  // namespace

TEST_CASE("topic and payload schema") {
  CHECK(point_topic("1", "slave-2", "led1") == "k4i/panel/1/plc/slave-2/point/led1");
  TopicBus bus;
  register_panel(bus);
  const auto m = bus.publish_point_update("1", "slave-2", "led1", SignalValue::digital(true), 1000);
  CHECK(m.topic == "k4i/panel/1/plc/slave-2/point/led1");
  CHECK(json::parse(m.payload) == json{{"ts", 1000}, {"value", true}});
  CHECK(json::parse(point_payload(5, SignalValue::analog(25.0, devices::Unit::celsius)))["value"] == 25.0);
  CHECK_THROWS_AS(bus.publish_point_update("1", "slave-2", "led9", SignalValue::digital(true), 0), Error);
}

TEST_CASE("wildcards") {
  CHECK(topic_matches("k4i/panel/1/plc/+/point/led1", "k4i/panel/1/plc/slave-1/point/led1"));
  CHECK(topic_matches("k4i/panel/1/plc/+/point/led1", "k4i/panel/1/plc/slave-2/point/led1"));
  CHECK_FALSE(topic_matches("k4i/panel/1/plc/+/point/led1", "k4i/panel/1/plc/slave-2/point/led2"));
  CHECK(topic_matches("k4i/#", "k4i/panel/1/plc/slave-2/point/led2"));
  CHECK(topic_matches("#", "k4i/panel/1"));
  CHECK_FALSE(topic_matches("k4i/panel/2/#", "k4i/panel/1/plc/master/point/led1"));
  CHECK_FALSE(topic_matches("k4i/+", "k4i/panel/1"));
  for (const char* bad : {"", "k4i/#/x", "k4i/pa+", "k4i/#x"}) CHECK_THROWS_AS(validate_pattern(bad), Error);
  TopicBus bus;
  register_panel(bus);
  CHECK_THROWS_AS(bus.subscribe("k4i/#/bad"), Error);
}

TEST_CASE("retained delivery and per-topic FIFO") {
  TopicBus bus;
  register_panel(bus);
  bus.publish_point_update("1", "slave-1", "led1", SignalValue::digital(false), 0);
  bus.publish_point_update("1", "slave-1", "led1", SignalValue::digital(true), 10);
  auto late = bus.subscribe("k4i/panel/1/plc/+/point/led1");
  auto first = late->next();
  REQUIRE(first);
  CHECK(first->retained);
  CHECK(json::parse(first->payload)["ts"] == 10);
  CHECK_FALSE(late->next());

  bus.publish_point_update("1", "slave-2", "led1", SignalValue::digital(true), 20);
  bus.publish_point_update("1", "slave-2", "led1", SignalValue::digital(false), 20);
  const auto got = late->drain();
  REQUIRE(got.size() == 2);
  CHECK_FALSE(got[0].retained);
  CHECK(json::parse(got[0].payload)["value"] == true);
  CHECK(json::parse(got[1].payload)["value"] == false);

  auto silent = bus.subscribe("k4i/panel/2/#");
  CHECK(silent->pending() == 0);
  bus.publish_point_update("1", "master", "led2", SignalValue::digital(true), 30);
  CHECK(silent->pending() == 0);
  bus.unsubscribe(late);
  bus.publish_point_update("1", "slave-2", "led1", SignalValue::digital(true), 40);
  CHECK(late->pending() == 0);
}

TEST_CASE("testbed publishes on the panel index and stays silent elsewhere") {
  auto tb = default_testbed();
  auto all = tb->bus().subscribe("k4i/#");
  auto none = tb->bus().subscribe("k4i/panel/2/#");
  CHECK(all->pending() > 0);
  CHECK(none->pending() == 0);
  tb->run(2000);
  CHECK(none->pending() == 0);
  const auto retained = tb->bus().retained();
  CHECK(retained.count("k4i/panel/1/plc/slave-1/point/temp1") == 1);
}

TEST_CASE("REST handler on the default scenario") {
  auto tb = default_testbed();
  RestApi api(direct_executor(*tb), {});
  auto req = [&](std::string method, std::string path, std::string body = "") {
    return api.handle({std::move(method), std::move(path), std::move(body), {}});
  };

  auto panels = req("GET", "/api/v1/panels");
  CHECK(panels.status == 200);
  const auto pj = json::parse(panels.body);
  REQUIRE(pj.size() == 1);
  CHECK(pj[0]["id"] == "panel-1");

  CHECK(req("POST", "/api/v1/panels/1/plcs/master/points/key_switch", R"({"value":true})").status == 200);
  tb->run(50);
  CHECK(tb->read_point("1", "master", "key_switch")->as_bool());
  CHECK(req("POST", "/api/v1/panels/panel-1/plcs/slave-1/points/temp1", R"({"value":50})").status == 409);
  CHECK(req("POST", "/api/v1/panels/1/plcs/slave-1/points/led1", R"({"value":true})").status == 409);
  CHECK(req("POST", "/api/v1/panels/1/plcs/master/points/key_switch", R"({"value":3})").status == 400);
  CHECK(req("POST", "/api/v1/panels/1/plcs/master/points/key_switch", "{nope").status == 400);
  CHECK(req("POST", "/api/v1/panels/1/plcs/master/points/key_switch", "{}").status == 400);
  CHECK(req("POST", "/api/v1/panels/1/plcs/master/points/nope", R"({"value":true})").status == 404);
  CHECK(req("GET", "/api/v1/panels/9/plcs").status == 404);
  CHECK(req("GET", "/api/v1/nothing").status == 404);

  const auto temp = json::parse(req("GET", "/api/v1/panels/1/plcs/slave-1/points/temp1").body);
  CHECK(temp["display"] == "25.00 °C");
  CHECK(temp["register"]["table"] == "input_registers");
  CHECK(temp["writable"] == false);

  const auto regs = req("GET", "/api/v1/panels/1/plcs/slave-1/registers");
  CHECK(regs.status == 200);
  const auto snap = json::parse(req("GET", "/api/v1/snapshot").body);
  CHECK(snap.contains("digest"));
  CHECK(snap.contains("state_digest"));

  const auto game = json::parse(req("GET", "/api/v1/game/state").body);
  CHECK(game["levels"].size() >= 1);
  const auto bad_level = req("POST", "/api/v1/game/flags", R"({"level":"nope","flag":"x"})");
  CHECK(bad_level.status == 400);
  const auto miss = json::parse(req("POST", "/api/v1/game/flags", R"({"level":"first-light","flag":"x"})").body);
  CHECK(miss["result"] == "rejected");
  CHECK(miss["reason"] == "mismatch");
  const auto hidden = json::parse(req("POST", "/api/v1/game/flags", R"({"level":"end-of-travel","flag":"x"})").body);
  CHECK(hidden["reason"] == "locked");
  const auto ok = json::parse(req("POST", "/api/v1/game/flags", R"({"level":"first-light","flag":"K4I{first_light}"})").body);
  CHECK(ok["result"] == "accepted");
  CHECK(ok["points"] == 10);
  CHECK(ok["score"] == 10);

  const auto net = json::parse(req("GET", "/api/v1/network").body);
  CHECK(net["attacker"] == true);
  CHECK(req("GET", "/api/v1/capture").status == 200);
}
