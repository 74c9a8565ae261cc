#include "k4i/training/session.hpp"

#include <algorithm>
#include <cmath>

#include "k4i/error.hpp"

namespace k4i::training {

using nlohmann::json;

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::level_revealed: return "level_revealed";
    case EventKind::condition_met: return "condition_met";
    case EventKind::flag_accepted: return "flag_accepted";
    case EventKind::flag_rejected: return "flag_rejected";
  }
  return "unknown";
}

std::string_view to_string(Rejection reason) {
  switch (reason) {
    case Rejection::duplicate: return "duplicate";
    case Rejection::mismatch: return "mismatch";
    case Rejection::locked: return "locked";
  }
  return "unknown";
}

std::string to_jsonl(const GameEvent& event) {
  nlohmann::ordered_json j;
  j["ts_ms"] = event.ts_ms;
  j["kind"] = to_string(event.kind);
  j["detail"] = event.detail;
  return j.dump();
}

GameSession::GameSession(GameSpec spec, std::string player, std::int64_t start_ms)
    : spec_(std::move(spec)), player_(std::move(player)) {
  for (std::size_t i = 0; i < spec_.levels.size(); ++i)
    if (spec_.levels[i].reveal == Reveal::on_start || i == 0) reveal(i, start_ms);
}

void GameSession::reveal(std::size_t level, std::int64_t now_ms) {
  if (revealed_.insert(spec_.levels[level].id).second)
    events_.push_back({now_ms, EventKind::level_revealed, spec_.levels[level].id});
}

bool GameSession::revealed(std::string_view level) const { return revealed_.contains(std::string(level)); }
bool GameSession::condition_met(std::string_view level) const { return met_.contains(std::string(level)); }

namespace {

bool pattern_in(const Bytes& payload, const std::vector<std::optional<std::uint8_t>>& pattern) {
  if (pattern.size() > payload.size()) return false;
  for (std::size_t start = 0; start + pattern.size() <= payload.size(); ++start) {
    bool ok = true;
    for (std::size_t i = 0; i < pattern.size() && ok; ++i)
      ok = !pattern[i] || *pattern[i] == payload[start + i];
    if (ok) return true;
  }
  return false;
}

}  // namespace

bool GameSession::eval(const FlagCondition& node, std::size_t level, const PointLookup& points,
                       std::span<const net::CaptureRecord> recent, std::int64_t now_ms) {
  switch (node.kind) {
    case ConditionKind::point_equals: {
      const auto v = points(node.point);
      if (!v) return false;
      if (std::holds_alternative<bool>(node.value))
        return v->is_digital() && v->as_bool() == std::get<bool>(node.value);
      return !v->is_digital() && v->as_real() == std::get<double>(node.value);
    }
    case ConditionKind::point_above: {
      const auto v = points(node.point);
      return v && !v->is_digital() && v->as_real() > node.threshold;
    }
    case ConditionKind::held_for: {
      const bool inner = !node.children.empty() && eval(node.children.front(), level, points, recent, now_ms);
      const auto key = std::make_pair(level, node.node_id);
      if (!inner) {
        held_since_.erase(key);
        return false;
      }
      const auto since = held_since_.try_emplace(key, now_ms).first->second;
      return now_ms - since >= node.duration_ms;
    }
    case ConditionKind::frame_seen:
      return std::any_of(recent.begin(), recent.end(), [&](const net::CaptureRecord& r) {
        if (r.dropped) return false;
        if (node.src && r.src != *node.src) return false;
        if (node.dst && r.dst != *node.dst) return false;
        return pattern_in(r.payload, node.pattern);
      });
    case ConditionKind::all: {
      bool all = true;
      for (const auto& child : node.children) all = eval(child, level, points, recent, now_ms) && all;
      return all;
    }
    case ConditionKind::any: {
      bool any = false;
      for (const auto& child : node.children) any = eval(child, level, points, recent, now_ms) || any;
      return any;
    }
  }
  return false;
}

std::vector<std::string> GameSession::evaluate(const PointLookup& points,
                                               std::span<const net::CaptureRecord> recent,
                                               std::int64_t now_ms) {
  std::vector<std::string> fired;
  for (std::size_t i = 0; i < spec_.levels.size(); ++i) {
    const Level& level = spec_.levels[i];
    if (!revealed_.contains(level.id) || met_.contains(level.id)) continue;
    if (eval(level.condition, i, points, recent, now_ms)) {
      met_.insert(level.id);
      events_.push_back({now_ms, EventKind::condition_met, level.id});
      fired.push_back(level.id);
      std::erase_if(held_since_, [i](const auto& kv) { return kv.first.first == i; });
    }
  }
  return fired;
}

SubmitResult GameSession::submit_flag(std::string_view level_id, std::string_view flag, std::int64_t now_ms) {
  const auto it = std::find_if(spec_.levels.begin(), spec_.levels.end(),
                               [&](const Level& l) { return l.id == level_id; });
  if (it == spec_.levels.end())
    throw Error(ErrorKind::validation, "unknown level \"" + std::string(level_id) + "\"");
  const Level& level = *it;

  auto reject = [&](Rejection reason) {
    events_.push_back({now_ms, EventKind::flag_rejected, level.id + ": " + std::string(to_string(reason))});
    return SubmitResult{false, 0, reason};
  };
  if (!revealed_.contains(level.id)) return reject(Rejection::locked);
  if (solved_.contains(level.id)) return reject(Rejection::duplicate);
  if (flag != level.flag) return reject(Rejection::mismatch);

  solved_.insert(level.id);
  score_ += level.points;
  last_accept_ms_ = now_ms;
  events_.push_back({now_ms, EventKind::flag_accepted, level.id});
  const auto index = static_cast<std::size_t>(it - spec_.levels.begin());
  if (index + 1 < spec_.levels.size() && spec_.levels[index + 1].reveal == Reveal::on_previous_solved)
    reveal(index + 1, now_ms);
  return SubmitResult{true, level.points, Rejection::mismatch};
}

std::string GameSession::export_events() const {
  std::string out;
  for (const auto& e : events_) {
    out += to_jsonl(e);
    out += '\n';
  }
  return out;
}

json GameSession::to_json() const {
  json levels = json::array();
  for (const auto& level : spec_.levels) {
    if (!revealed_.contains(level.id)) continue;
    json l;
    l["id"] = level.id;
    l["description"] = level.description;
    l["points"] = level.points;
    l["solved"] = solved_.contains(level.id);
    l["condition_met"] = met_.contains(level.id);
    if (met_.contains(level.id)) {
      if (level.channel.kind == FlagChannel::Kind::description)
        l["flag"] = level.flag;
      else
        l["flag_at"] = level.channel.panel + "/" + level.channel.plc + "/" + level.channel.device;
    }
    levels.push_back(std::move(l));
  }
  json j;
  j["title"] = spec_.title;
  j["player"] = player_;
  j["score"] = score_;
  j["solved"] = solved_;
  j["levels"] = std::move(levels);
  j["total_levels"] = spec_.levels.size();
  j["last_accept_ms"] = last_accept_ms_ ? json(*last_accept_ms_) : json(nullptr);
  json events = json::array();
  for (const auto& e : events_)
    events.push_back({{"ts_ms", e.ts_ms}, {"kind", to_string(e.kind)}, {"detail", e.detail}});
  j["events"] = std::move(events);
  return j;
}

std::vector<Standing> scoreboard(std::span<const GameSession> sessions) {
  std::vector<Standing> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) out.push_back({s.player(), s.score(), s.last_accept_ms()});
  std::stable_sort(out.begin(), out.end(), [](const Standing& a, const Standing& b) {
    if (a.score != b.score) return a.score > b.score;
    const auto ta = a.last_accept_ms.value_or(INT64_MAX);
    const auto tb = b.last_accept_ms.value_or(INT64_MAX);
    return ta < tb;
  });
  return out;
}

}  // namespace k4i::training
