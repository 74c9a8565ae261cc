#include <doctest.h>

#include <map>
#include <random>

#include <nlohmann/json.hpp>

#include "k4i/error.hpp"
#include "k4i/hex.hpp"
#include "k4i/training/game.hpp"
#include "k4i/training/session.hpp"

using namespace k4i;
using namespace k4i::training;
using devices::SignalKind;
using devices::SignalValue;

namespace {

GameReferences refs() {
  GameReferences r;
  for (const char* plc : {"slave-1", "slave-2"}) {
    for (const char* p : {"led1", "led2", "led3", "button1"}) r.points[std::string("panel-1/") + plc + "/" + p] = SignalKind::digital;
    r.points[std::string("panel-1/") + plc + "/temp1"] = SignalKind::analog;
    r.epapers.insert(std::string("panel-1/") + plc + "/epaper");
  }
  r.points["panel-1/master/motor_endstop_high"] = SignalKind::digital;
  r.endpoints = {"panel-1/slave-1", "panel-1/slave-2", "attacker", "controller"};
  return r;
}

std::string game(const std::string& levels) { return R"({"schema":"k4i-game/1","title":"t","levels":)" + levels + "}"; }

const char* first_light = R"({"id":"first-light","points":10,"flag":"K4I{first_light}","reveal":"on_start",
  "condition":{"type":"point_equals","point":"slave-2/led3","value":true}})";

std::vector<Issue> issues_of(const std::string& text) {
  try {
    (void)load_game(text, refs());
  } catch (const ValidationError& e) {
    return e.issues();
  }
  return {};
}

bool mentions(const std::vector<Issue>& issues, const std::string& needle) {
  for (const auto& i : issues)
    if ((i.path + " " + i.message).find(needle) != std::string::npos) return true;
  return false;
}

struct World {
  std::map<std::string, SignalValue> values;
  PointLookup lookup() {
    return [this](const PointRef& r) -> std::optional<SignalValue> {
      auto it = values.find(r.str());
      if (it == values.end()) return std::nullopt;
      return it->second;
    };
  }
};

GameSpec three_levels() {
  return load_game(game(std::string("[") + first_light + R"(,
    {"id":"two","points":20,"flag":"K4I{two}","condition":{"type":"point_equals","point":"slave-1/led1","value":true}},
    {"id":"three","points":30,"flag":"K4I{three}","condition":{"type":"all","conditions":[]}}])"),
                   refs());
}

int solved_points(const GameSession& s) {
  int sum = 0;
  for (const auto& id : s.solved()) sum += s.spec().find(id)->points;
  return sum;
}

}  // namespace

TEST_CASE("load examples") {
  const auto spec = load_game(game(std::string("[") + first_light + "]"), refs());
  REQUIRE(spec.levels.size() == 1);
  CHECK(spec.levels[0].condition.point.str() == "panel-1/slave-2/led3");

  const auto shared = issues_of(game(std::string("[") + first_light + R"(,
    {"id":"other","points":5,"flag":"K4I{first_light}","condition":{"type":"all","conditions":[]}}])"));
  CHECK(mentions(shared, "/levels/1/flag"));

  const auto led9 = issues_of(game(R"([{"id":"x","points":1,"flag":"f","condition":
    {"type":"point_equals","point":"slave-2/led9","value":true}}])"));
  CHECK(mentions(led9, "unknown point"));

  const auto ambiguous = issues_of(game(R"([{"id":"x","points":1,"flag":"f","condition":
    {"type":"point_equals","point":"led3","value":true}}])"));
  CHECK(mentions(ambiguous, "ambiguous"));

  const auto bad_duration = issues_of(game(R"([{"id":"x","points":1,"flag":"f","condition":
    {"type":"held_for","duration_ms":0,"condition":{"type":"all","conditions":[]}}}])"));
  CHECK(mentions(bad_duration, "/levels/0/condition/duration_ms"));

  const auto several = issues_of(game(R"([{"id":"x","points":0,"flag":"f","condition":{"type":"nope"}},
    {"id":"x","points":1,"flag":"g","condition":{"type":"point_above","point":"slave-1/led1","threshold":1}}])"));
  CHECK(several.size() >= 4);

  CHECK_FALSE(issues_of(game(R"([{"id":"x","points":1,"flag":"f","condition":
    {"type":"frame_seen","src":"attacker","pattern":"05 ?? ?? ff"}}])")).size() > 0);
  CHECK(mentions(issues_of(game(R"([{"id":"x","points":1,"flag":"f","condition":
    {"type":"frame_seen","src":"nobody"}}])")), "src"));
}

TEST_CASE("empty conjunction is satisfied immediately") {
  const auto spec = load_game(game(R"([{"id":"v","points":1,"flag":"f","reveal":"on_start",
    "condition":{"type":"all","conditions":[]}}])"), refs());
  GameSession s(spec);
  World w;
  CHECK(s.evaluate(w.lookup(), {}, 10) == std::vector<std::string>{"v"});
  CHECK(s.evaluate(w.lookup(), {}, 20).empty());
}

TEST_CASE("submit flow") {
  GameSession s(three_levels(), "alice");
  World w;
  CHECK(s.submit_flag("two", "K4I{two}", 5).reason == Rejection::locked);
  CHECK_FALSE(s.condition_met("first-light"));
  w.values["panel-1/slave-2/led3"] = SignalValue::digital(true);
  CHECK(s.evaluate(w.lookup(), {}, 10) == std::vector<std::string>{"first-light"});

  const auto wrong = s.submit_flag("first-light", "k4i{first_light}", 11);
  CHECK_FALSE(wrong.accepted);
  CHECK(wrong.reason == Rejection::mismatch);
  CHECK(s.score() == 0);

  const auto ok = s.submit_flag("first-light", "K4I{first_light}", 12);
  CHECK(ok.accepted);
  CHECK(ok.points == 10);
  CHECK(s.score() == 10);
  CHECK(s.revealed("two"));
  CHECK_FALSE(s.revealed("three"));

  const auto dup = s.submit_flag("first-light", "K4I{first_light}", 13);
  CHECK(dup.reason == Rejection::duplicate);
  CHECK(s.score() == 10);
  CHECK_THROWS_AS(s.submit_flag("no-such-level", "x", 14), Error);

  const auto log = s.export_events();
  CHECK(log.find("\"flag_rejected\"") != std::string::npos);
  CHECK(log.find("\"flag_accepted\"") != std::string::npos);
  const auto first_line = log.substr(0, log.find('\n'));
  CHECK(first_line.rfind(R"({"ts_ms":0,"kind":"level_revealed")", 0) == 0);
}

TEST_CASE("held_for fires on the first tick the predicate has held long enough") {
  const auto spec = load_game(game(R"([{"id":"hot","points":5,"flag":"f","reveal":"on_start","condition":
    {"type":"held_for","duration_ms":5000,"condition":{"type":"point_above","point":"slave-2/temp1","threshold":60}}}])"),
                              refs());
  GameSession s(spec);
  World w;
  std::int64_t fired = -1;
  for (std::int64_t t = 10; t <= 20000; t += 10) {
    const double temp = t < 3000 ? 25 : (t < 4000 ? 61 : (t < 4500 ? 59 : 61));
    w.values["panel-1/slave-2/temp1"] = SignalValue::analog(temp, devices::Unit::celsius);
    if (!s.evaluate(w.lookup(), {}, t).empty()) {
      CHECK(fired == -1);
      fired = t;
    }
  }
  // Predicate becomes true again at 4500, so the hold completes at 9500.
  CHECK(fired == 9500);
}

TEST_CASE("frame_seen matches wildcard patterns and ignores dropped frames") {
  const auto spec = load_game(game(R"([{"id":"f","points":5,"flag":"f","reveal":"on_start","condition":
    {"type":"frame_seen","src":"attacker","dst":"panel-1/slave-1","pattern":"05 00 ?? ff 00"}}])"), refs());
  GameSession s(spec);
  World w;
  net::CaptureRecord dropped{1, 5, "attacker", "panel-1/slave-1", from_hex("0001000000060105000aff00"), true};
  CHECK(s.evaluate(w.lookup(), std::span(&dropped, 1), 10).empty());
  net::CaptureRecord other_src{2, 6, "controller", "panel-1/slave-1", from_hex("0001000000060105000aff00"), false};
  CHECK(s.evaluate(w.lookup(), std::span(&other_src, 1), 20).empty());
  net::CaptureRecord hit{3, 7, "attacker", "panel-1/slave-1", from_hex("0001000000060105000aff00"), false};
  CHECK(s.evaluate(w.lookup(), std::span(&hit, 1), 30) == std::vector<std::string>{"f"});
}

TEST_CASE("score conservation and single fire under random play") {
  std::mt19937 rng(3);
  const char* flags[] = {"K4I{first_light}", "K4I{two}", "K4I{three}", "nope"};
  const char* ids[] = {"first-light", "two", "three"};
  for (int round = 0; round < 50; ++round) {
    GameSession s(three_levels());
    World w;
    for (int t = 1; t <= 200; ++t) {
      w.values["panel-1/slave-2/led3"] = SignalValue::digital(rng() % 5 == 0);
      w.values["panel-1/slave-1/led1"] = SignalValue::digital(rng() % 5 == 0);
      s.evaluate(w.lookup(), {}, t * 10);
      if (rng() % 3 == 0) s.submit_flag(ids[rng() % 3], flags[rng() % 4], t * 10);
      REQUIRE(s.score() == solved_points(s));
    }
    std::map<std::string, int> met;
    for (const auto& e : s.events())
      if (e.kind == EventKind::condition_met) ++met[e.detail];
    for (const auto& [level, n] : met) CHECK(n == 1);
  }
}

TEST_CASE("scoreboard ordering") {
  CHECK(scoreboard(std::span<const GameSession>{}).empty());
  std::vector<GameSession> sessions;
  const auto spec = three_levels();
  World w;
  w.values["panel-1/slave-2/led3"] = SignalValue::digital(true);
  w.values["panel-1/slave-1/led1"] = SignalValue::digital(true);
  for (const char* p : {"late", "early", "top", "idle"}) sessions.emplace_back(spec, p);
  for (auto& s : sessions) s.evaluate(w.lookup(), {}, 10);
  sessions[0].submit_flag("first-light", "K4I{first_light}", 500);
  sessions[1].submit_flag("first-light", "K4I{first_light}", 100);
  sessions[2].submit_flag("first-light", "K4I{first_light}", 50);
  sessions[2].evaluate(w.lookup(), {}, 60);
  sessions[2].submit_flag("two", "K4I{two}", 70);
  const auto board = scoreboard(sessions);
  REQUIRE(board.size() == 4);
  CHECK(board[0].player == "top");
  CHECK(board[0].score == 30);
  CHECK(board[1].player == "early");
  CHECK(board[2].player == "late");
  CHECK(board[3].player == "idle");
}
