#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "k4i/net/switch.hpp"
#include "k4i/training/game.hpp"

namespace k4i::training {

enum class EventKind { level_revealed, condition_met, flag_accepted, flag_rejected };

std::string_view to_string(EventKind kind);

struct GameEvent {
  std::int64_t ts_ms = 0;
  EventKind kind = EventKind::level_revealed;
  std::string detail;

  friend bool operator==(const GameEvent&, const GameEvent&) = default;
};

std::string to_jsonl(const GameEvent& event);

enum class Rejection { duplicate, mismatch, locked };

std::string_view to_string(Rejection reason);

struct SubmitResult {
  bool accepted = false;
  int points = 0;
  Rejection reason = Rejection::mismatch;
};

using PointLookup = std::function<std::optional<devices::SignalValue>(const PointRef&)>;

/// One player's run through a game.
class GameSession {
 public:
  explicit GameSession(GameSpec spec, std::string player = "player", std::int64_t start_ms = 0);

  /// Called once per tick. Returns the levels whose condition became true on
  /// this tick; each level fires at most once per session.
  std::vector<std::string> evaluate(const PointLookup& points, std::span<const net::CaptureRecord> recent,
                                    std::int64_t now_ms);

  /// Exact, case-sensitive match. Throws a validation Error for an unknown level.
  SubmitResult submit_flag(std::string_view level_id, std::string_view flag, std::int64_t now_ms);

  [[nodiscard]] const GameSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const std::string& player() const noexcept { return player_; }
  [[nodiscard]] int score() const noexcept { return score_; }
  [[nodiscard]] const std::set<std::string>& solved() const noexcept { return solved_; }
  [[nodiscard]] bool revealed(std::string_view level) const;
  [[nodiscard]] bool condition_met(std::string_view level) const;
  [[nodiscard]] std::optional<std::int64_t> last_accept_ms() const noexcept { return last_accept_ms_; }
  [[nodiscard]] const std::vector<GameEvent>& events() const noexcept { return events_; }

  [[nodiscard]] std::string export_events() const;
  [[nodiscard]] nlohmann::json to_json() const;

 private:
  bool eval(const FlagCondition& node, std::size_t level, const PointLookup& points,
            std::span<const net::CaptureRecord> recent, std::int64_t now_ms);
  void reveal(std::size_t level, std::int64_t now_ms);

  GameSpec spec_;
  std::string player_;
  int score_ = 0;
  std::set<std::string> solved_;
  std::set<std::string> revealed_;
  std::set<std::string> met_;
  std::map<std::pair<std::size_t, int>, std::int64_t> held_since_;
  std::optional<std::int64_t> last_accept_ms_;
  std::vector<GameEvent> events_;
};

struct Standing {
  std::string player;
  int score = 0;
  std::optional<std::int64_t> last_accept_ms;
};

/// Highest score first; ties go to whoever reached it earlier.
std::vector<Standing> scoreboard(std::span<const GameSession> sessions);

}  // namespace k4i::training
