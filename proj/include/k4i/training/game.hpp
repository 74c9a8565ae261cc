#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "k4i/devices/signal.hpp"

namespace k4i::training {

/// "panel/plc/point", e.g. "panel-1/slave-2/led3".
struct PointRef {
  std::string panel;
  std::string plc;
  std::string point;

  [[nodiscard]] std::string str() const { return panel + "/" + plc + "/" + point; }
  static std::optional<PointRef> parse(std::string_view text);

  friend auto operator<=>(const PointRef&, const PointRef&) = default;
};

enum class ConditionKind { point_equals, point_above, held_for, frame_seen, all, any };

/// Predicate tree over testbed observables. Fields not used by a node's kind
/// stay at their defaults.
struct FlagCondition {
  ConditionKind kind = ConditionKind::all;
  PointRef point;
  std::variant<bool, double> value{false};
  double threshold = 0.0;
  std::int64_t duration_ms = 0;
  std::optional<std::string> src;
  std::optional<std::string> dst;
  std::vector<std::optional<std::uint8_t>> pattern;  // nullopt matches any byte
  std::vector<FlagCondition> children;
  int node_id = 0;  // pre-order index within the level's tree
};

enum class Reveal { on_start, on_previous_solved };

struct FlagChannel {
  enum class Kind { description, epaper } kind = Kind::description;
  std::string panel;
  std::string plc;
  std::string device;
};

struct Level {
  std::string id;
  std::string description;
  int points = 0;
  std::string flag;
  FlagCondition condition;
  Reveal reveal = Reveal::on_previous_solved;
  FlagChannel channel;
};

struct GameSpec {
  std::string title;
  std::vector<Level> levels;

  [[nodiscard]] const Level* find(std::string_view id) const;
};

/// What a game file may refer to, taken from the scenario it runs on.
struct GameReferences {
  std::map<std::string, devices::SignalKind> points;  // PointRef::str()
  std::set<std::string> endpoints;
  std::set<std::string> epapers;  // "panel/plc/device"
};

/// Parses a "k4i-game/1" document. Throws a ValidationError listing every
/// problem with its path.
GameSpec load_game(std::string_view text, const GameReferences& refs);

}  // namespace k4i::training
