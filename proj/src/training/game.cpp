#include "k4i/training/game.hpp"

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "k4i/error.hpp"

namespace k4i::training {

using nlohmann::json;

std::optional<PointRef> PointRef::parse(std::string_view text) {
  const auto a = text.find('/');
  if (a == std::string_view::npos) return std::nullopt;
  const auto b = text.find('/', a + 1);
  if (b == std::string_view::npos || text.find('/', b + 1) != std::string_view::npos) return std::nullopt;
  PointRef ref{std::string(text.substr(0, a)), std::string(text.substr(a + 1, b - a - 1)),
               std::string(text.substr(b + 1))};
  if (ref.panel.empty() || ref.plc.empty() || ref.point.empty()) return std::nullopt;
  return ref;
}

const Level* GameSpec::find(std::string_view id) const {
  for (const auto& level : levels)
    if (level.id == id) return &level;
  return nullptr;
}

namespace {

bool suffix_match(std::string_view full, std::string_view shorthand) {
  if (full == shorthand) return true;
  if (full.size() <= shorthand.size()) return false;
  return full.ends_with(shorthand) && full[full.size() - shorthand.size() - 1] == '/';
}

class Loader {
 public:
  explicit Loader(const GameReferences& refs) : refs_(refs) {}

  GameSpec load(std::string_view text) {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ValidationError("", std::string("invalid JSON: ") + e.what());
    }
    GameSpec spec;
    if (!doc.is_object()) {
      issue("", "document must be an object");
      throw ValidationError(std::move(issues_));
    }
    if (doc.value("schema", "") != "k4i-game/1") issue("/schema", "expected \"k4i-game/1\"");
    if (doc.contains("title") && doc["title"].is_string())
      spec.title = doc["title"].get<std::string>();
    else
      issue("/title", "missing or not a string");

    const auto levels = doc.find("levels");
    if (levels == doc.end() || !levels->is_array()) {
      issue("/levels", "missing or not an array");
    } else {
      std::set<std::string> ids;
      std::set<std::string> flags;
      for (std::size_t i = 0; i < levels->size(); ++i) {
        const std::string path = "/levels/" + std::to_string(i);
        Level level = parse_level((*levels)[i], path);
        if (!level.id.empty() && !ids.insert(level.id).second) issue(path + "/id", "duplicate level id");
        if (!level.flag.empty() && !flags.insert(level.flag).second) issue(path + "/flag", "duplicate flag");
        spec.levels.push_back(std::move(level));
      }
    }
    if (!issues_.empty()) throw ValidationError(std::move(issues_));
    return spec;
  }

 private:
  void issue(std::string path, std::string message) { issues_.push_back({std::move(path), std::move(message)}); }

  std::string string_field(const json& obj, const char* key, const std::string& path, bool required = true) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) issue(path + "/" + key, "missing");
      return {};
    }
    if (!it->is_string()) {
      issue(path + "/" + key, "not a string");
      return {};
    }
    return it->get<std::string>();
  }

  Level parse_level(const json& obj, const std::string& path) {
    Level level;
    if (!obj.is_object()) {
      issue(path, "level must be an object");
      return level;
    }
    level.id = string_field(obj, "id", path);
    if (obj.contains("id") && level.id.empty() && obj["id"].is_string()) issue(path + "/id", "empty");
    level.description = string_field(obj, "description", path, false);
    level.flag = string_field(obj, "flag", path);
    if (obj.contains("flag") && obj["flag"].is_string() && level.flag.empty()) issue(path + "/flag", "empty");

    const auto pts = obj.find("points");
    if (pts == obj.end() || !pts->is_number_integer()) {
      issue(path + "/points", "missing or not an integer");
    } else if (pts->get<long long>() <= 0 || pts->get<long long>() > 1000000) {
      issue(path + "/points", "must be a positive integer");
    } else {
      level.points = pts->get<int>();
    }

    const std::string reveal = string_field(obj, "reveal", path, false);
    if (reveal.empty() || reveal == "on_previous_solved")
      level.reveal = Reveal::on_previous_solved;
    else if (reveal == "on_start")
      level.reveal = Reveal::on_start;
    else
      issue(path + "/reveal", "expected on_start or on_previous_solved");

    if (const auto ch = obj.find("flag_channel"); ch != obj.end()) parse_channel(*ch, path + "/flag_channel", level);

    const auto cond = obj.find("condition");
    if (cond == obj.end()) {
      issue(path + "/condition", "missing");
    } else {
      int next_id = 0;
      level.condition = parse_condition(*cond, path + "/condition", next_id);
    }
    return level;
  }

  void parse_channel(const json& ch, const std::string& path, Level& level) {
    if (ch.is_string() && ch.get<std::string>() == "description") return;
    if (!ch.is_object()) {
      issue(path, "expected \"description\" or an object");
      return;
    }
    const std::string kind = string_field(ch, "kind", path);
    if (kind == "description") return;
    if (kind != "epaper") {
      if (!kind.empty()) issue(path + "/kind", "expected description or epaper");
      return;
    }
    const std::string device = string_field(ch, "device", path);
    if (device.empty()) return;
    const auto resolved = resolve(refs_.epapers, device);
    if (!resolved) {
      issue(path + "/device", "unknown e-paper device \"" + device + "\"");
      return;
    }
    const auto ref = PointRef::parse(*resolved);
    level.channel.kind = FlagChannel::Kind::epaper;
    level.channel.panel = ref->panel;
    level.channel.plc = ref->plc;
    level.channel.device = ref->point;
  }

  // Unique suffix match at a '/' boundary, or nullopt.
  template <typename Container>
  std::optional<std::string> resolve(const Container& names, std::string_view text, bool* ambiguous = nullptr) {
    std::optional<std::string> found;
    for (const auto& item : names) {
      const std::string& name = key_of(item);
      if (name == text) return name;
      if (suffix_match(name, text)) {
        if (found) {
          if (ambiguous) *ambiguous = true;
          return std::nullopt;
        }
        found = name;
      }
    }
    return found;
  }

  static const std::string& key_of(const std::string& s) { return s; }
  template <typename V>
  static const std::string& key_of(const std::pair<const std::string, V>& p) {
    return p.first;
  }

  std::optional<PointRef> point_ref(const json& obj, const std::string& path, devices::SignalKind* kind) {
    const std::string text = string_field(obj, "point", path);
    if (text.empty()) return std::nullopt;
    bool ambiguous = false;
    const auto resolved = resolve(refs_.points, text, &ambiguous);
    if (!resolved) {
      issue(path + "/point", ambiguous ? "ambiguous point \"" + text + "\"" : "unknown point \"" + text + "\"");
      return std::nullopt;
    }
    *kind = refs_.points.at(*resolved);
    return PointRef::parse(*resolved);
  }

  std::optional<std::string> endpoint_ref(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const std::string text = string_field(obj, key, path);
    if (text.empty()) return std::nullopt;
    bool ambiguous = false;
    const auto resolved = resolve(refs_.endpoints, text, &ambiguous);
    if (!resolved) {
      issue(path + "/" + key,
            ambiguous ? "ambiguous endpoint \"" + text + "\"" : "unknown endpoint \"" + text + "\"");
      return std::nullopt;
    }
    return resolved;
  }

  std::vector<std::optional<std::uint8_t>> parse_pattern(const std::string& text, const std::string& path) {
    std::string compact;
    for (char c : text)
      if (c != ' ' && c != ':' && c != '\t') compact.push_back(c);
    std::vector<std::optional<std::uint8_t>> out;
    if (compact.empty() || compact.size() % 2 != 0) {
      issue(path, "pattern must be a non-empty even number of hex digits");
      return out;
    }
    for (std::size_t i = 0; i < compact.size(); i += 2) {
      const std::string pair = compact.substr(i, 2);
      if (pair == "??") {
        out.emplace_back(std::nullopt);
        continue;
      }
      unsigned value = 0;
      bool ok = true;
      for (char c : pair) {
        value <<= 4;
        if (c >= '0' && c <= '9') value |= static_cast<unsigned>(c - '0');
        else if (c >= 'a' && c <= 'f') value |= static_cast<unsigned>(c - 'a' + 10);
        else if (c >= 'A' && c <= 'F') value |= static_cast<unsigned>(c - 'A' + 10);
        else ok = false;
      }
      if (!ok) {
        issue(path, "invalid hex byte \"" + pair + "\"");
        return {};
      }
      out.emplace_back(static_cast<std::uint8_t>(value));
    }
    return out;
  }

  FlagCondition parse_condition(const json& obj, const std::string& path, int& next_id) {
    FlagCondition node;
    node.node_id = next_id++;
    if (!obj.is_object()) {
      issue(path, "condition must be an object");
      return node;
    }
    const std::string type = string_field(obj, "type", path);
    if (type == "point_equals") {
      node.kind = ConditionKind::point_equals;
      devices::SignalKind kind{};
      if (auto ref = point_ref(obj, path, &kind)) {
        node.point = *ref;
        const auto v = obj.find("value");
        if (v == obj.end()) {
          issue(path + "/value", "missing");
        } else if (kind == devices::SignalKind::digital) {
          if (v->is_boolean()) node.value = v->get<bool>();
          else issue(path + "/value", "digital point needs a boolean value");
        } else {
          if (v->is_number()) node.value = v->get<double>();
          else issue(path + "/value", "analog point needs a numeric value");
        }
      }
    } else if (type == "point_above") {
      node.kind = ConditionKind::point_above;
      devices::SignalKind kind{};
      if (auto ref = point_ref(obj, path, &kind)) {
        node.point = *ref;
        if (kind != devices::SignalKind::analog) issue(path + "/point", "point_above needs an analog point");
      }
      const auto t = obj.find("threshold");
      if (t == obj.end() || !t->is_number() || !std::isfinite(t->get<double>()))
        issue(path + "/threshold", "missing or not a finite number");
      else
        node.threshold = t->get<double>();
    } else if (type == "held_for") {
      node.kind = ConditionKind::held_for;
      const auto d = obj.find("duration_ms");
      if (d == obj.end() || !d->is_number_integer())
        issue(path + "/duration_ms", "missing or not an integer");
      else if (d->get<long long>() <= 0)
        issue(path + "/duration_ms", "duration must be positive");
      else
        node.duration_ms = d->get<std::int64_t>();
      const auto inner = obj.find("condition");
      if (inner == obj.end())
        issue(path + "/condition", "missing");
      else
        node.children.push_back(parse_condition(*inner, path + "/condition", next_id));
    } else if (type == "frame_seen") {
      node.kind = ConditionKind::frame_seen;
      node.src = endpoint_ref(obj, "src", path);
      node.dst = endpoint_ref(obj, "dst", path);
      const std::string pattern = string_field(obj, "pattern", path);
      if (obj.contains("pattern") && obj["pattern"].is_string())
        node.pattern = parse_pattern(pattern, path + "/pattern");
    } else if (type == "all" || type == "any") {
      node.kind = type == "all" ? ConditionKind::all : ConditionKind::any;
      const auto list = obj.find("conditions");
      if (list == obj.end() || !list->is_array()) {
        issue(path + "/conditions", "missing or not an array");
      } else {
        for (std::size_t i = 0; i < list->size(); ++i)
          node.children.push_back(
              parse_condition((*list)[i], path + "/conditions/" + std::to_string(i), next_id));
      }
    } else if (!type.empty()) {
      issue(path + "/type", "unknown condition type \"" + type + "\"");
    }
    return node;
  }

  const GameReferences& refs_;
  std::vector<Issue> issues_;
};

}  // namespace

GameSpec load_game(std::string_view text, const GameReferences& refs) { return Loader(refs).load(text); }

}  // namespace k4i::training
