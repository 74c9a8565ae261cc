#include "k4i/telemetry/rest.hpp"

#include <nlohmann/json.hpp>

#include "k4i/error.hpp"
#include "k4i/net/switch.hpp"

namespace k4i::telemetry {

using nlohmann::json;
using orchestrator::Testbed;

Executor host_executor(orchestrator::Host& host) {
  return [&host](const std::function<void(Testbed&)>& f) {
    host.query([&f](Testbed& t) {
      f(t);
      return 0;
    });
  };
}

Executor direct_executor(Testbed& testbed) {
  return [&testbed](const std::function<void(Testbed&)>& f) { f(testbed); };
}

RestApi::RestApi(Executor executor, std::vector<orchestrator::BridgeInfo> bridges)
    : exec_(std::move(executor)), bridges_(std::move(bridges)) {}

namespace {

RestResponse reply(int status, const json& body) { return {status, body.dump(), "application/json"}; }
RestResponse error(int status, const std::string& message) { return reply(status, json{{"error", message}}); }

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    const auto j = path.find('/', i);
    const auto end = j == std::string::npos ? path.size() : j;
    if (end > i) out.push_back(path.substr(i, end - i));
    i = end;
  }
  return out;
}

json value_json(const devices::SignalValue& v) { return v.is_digital() ? json(v.as_bool()) : json(v.as_real()); }

json point_json(const orchestrator::PlcEntry& entry, const plc::PointSpec& spec) {
  const auto& plc = entry.plc;
  const auto& value = plc.image().at(spec.name);
  json j;
  j["name"] = spec.name;
  j["direction"] = plc::to_string(spec.direction);
  j["kind"] = spec.kind == devices::SignalKind::digital ? "digital" : "analog";
  j["unit"] = devices::unit_name(spec.unit);
  j["value"] = value_json(value);
  j["display"] = devices::format_signal(value);
  j["binding"] = spec.binding;
  j["writable"] = plc.is_stimulus(spec.name);
  j["ts_ms"] = plc.image().timestamp_ms;
  if (const auto* reg = plc.register_map().find(spec.name))
    j["register"] = {{"table", plc::to_string(reg->table)}, {"address", reg->address}, {"scale", reg->scale}};
  return j;
}

}  // namespace

RestResponse RestApi::handle(const RestRequest& req) const {
  const auto seg = split_path(req.path);
  if (seg.size() < 2 || seg[0] != "api" || seg[1] != "v1") return error(404, "no such resource");
  const std::size_t n = seg.size();
  const bool get = req.method == "GET";
  const bool post = req.method == "POST";
  RestResponse out = error(404, "no such resource");

  try {
    // /api/v1/panels...
    if (n >= 3 && seg[2] == "panels") {
      if (n == 3 && get) {
        exec_([&](Testbed& t) {
          json list = json::array();
          for (const auto& panel : t.panels()) {
            json plcs = json::array();
            for (const auto idx : panel.plcs) plcs.push_back(t.plcs()[idx].plc.id());
            list.push_back({{"id", panel.id},
                            {"index", panel.index},
                            {"form_factor", orchestrator::to_string(panel.form_factor)},
                            {"plcs", std::move(plcs)}});
          }
          out = reply(200, list);
        });
        return out;
      }
      if (n < 5 || seg[4] != "plcs") return out;
      const std::string& panel = seg[3];
      exec_([&](Testbed& t) {
        const auto pidx = t.panel_index(panel);
        if (!pidx) {
          out = error(404, "unknown panel \"" + panel + "\"");
          return;
        }
        if (n == 5) {
          if (!get) return;
          json list = json::array();
          for (const auto idx : t.panels()[*pidx].plcs) {
            const auto& e = t.plcs()[idx];
            json j{{"id", e.plc.id()},
                   {"role", plc::to_string(e.plc.role())},
                   {"model_label", e.plc.model_label()},
                   {"endpoint", e.endpoint},
                   {"scan_ms", e.plc.scan_ms()},
                   {"cycles", e.plc.cycles()},
                   {"points", e.plc.points().size()}};
            for (const auto& b : bridges_)
              if (b.endpoint == e.endpoint) j["bridge_port"] = b.port;
            list.push_back(std::move(j));
          }
          out = reply(200, list);
          return;
        }
        const auto* entry = t.find_plc(panel, seg[5]);
        if (entry == nullptr) {
          out = error(404, "unknown PLC \"" + seg[5] + "\"");
          return;
        }
        if (n == 7 && seg[6] == "registers" && get) {
          out = reply(200, entry->plc.register_map().to_json());
          return;
        }
        if (n < 7 || seg[6] != "points") return;
        if (n == 7 && get) {
          json list = json::array();
          for (const auto& spec : entry->plc.points()) list.push_back(point_json(*entry, spec));
          out = reply(200, list);
          return;
        }
        if (n != 8) return;
        const auto* spec = entry->plc.find_point(seg[7]);
        if (spec == nullptr) {
          out = error(404, "unknown point \"" + seg[7] + "\"");
          return;
        }
        if (get) {
          out = reply(200, point_json(*entry, *spec));
          return;
        }
        if (!post) return;
        json body;
        try {
          body = json::parse(req.body);
        } catch (const json::parse_error&) {
          out = error(400, "body must be JSON");
          return;
        }
        if (!body.is_object() || !body.contains("value")) {
          out = error(400, "body must be {\"value\": ...}");
          return;
        }
        if (!entry->plc.is_stimulus(spec->name)) {
          out = error(409, "point \"" + spec->name + "\" is not a writable stimulus input");
          return;
        }
        const auto& v = body["value"];
        devices::SignalValue value;
        if (spec->kind == devices::SignalKind::digital && v.is_boolean())
          value = devices::SignalValue::digital(v.get<bool>());
        else if (spec->kind == devices::SignalKind::analog && v.is_number())
          value = devices::SignalValue::analog(v.get<double>(), spec->unit);
        else {
          out = error(400, "value type does not match the point");
          return;
        }
        const auto result = t.set_stimulus(panel, entry->plc.id(), spec->name, value);
        if (result != orchestrator::PointWriteResult::ok) {
          out = error(409, std::string(orchestrator::to_string(result)));
          return;
        }
        json ok = point_json(*entry, *spec);
        ok["accepted"] = true;
        out = reply(200, ok);
      });
      return out;
    }

    if (n == 4 && seg[2] == "game" && seg[3] == "state" && get) {
      exec_([&](Testbed& t) {
        out = t.has_game() ? reply(200, t.game()->to_json()) : error(404, "no game loaded");
      });
      return out;
    }

    if (n == 4 && seg[2] == "game" && seg[3] == "flags" && post) {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::parse_error&) {
        return error(400, "body must be JSON");
      }
      if (!body.is_object() || !body.contains("level") || !body.contains("flag") || !body["level"].is_string() ||
          !body["flag"].is_string())
        return error(400, "body must be {\"level\": <id>, \"flag\": <string>}");
      const auto level = body["level"].get<std::string>();
      const auto flag = body["flag"].get<std::string>();
      exec_([&](Testbed& t) {
        if (!t.has_game()) {
          out = error(404, "no game loaded");
          return;
        }
        try {
          const auto r = t.submit_flag(level, flag);
          json j;
          if (r.accepted) {
            j = {{"result", "accepted"}, {"level", level}, {"points", r.points}};
          } else {
            j = {{"result", "rejected"}, {"level", level}, {"reason", training::to_string(r.reason)}};
          }
          j["score"] = t.game()->score();
          out = reply(200, j);
        } catch (const Error& e) {
          out = error(400, e.what());
        }
      });
      return out;
    }

    if (n == 3 && seg[2] == "snapshot" && get) {
      exec_([&](Testbed& t) {
        json j = t.snapshot();
        j["digest"] = t.digest();
        j["state_digest"] = t.state_digest();
        out = reply(200, j);
      });
      return out;
    }

    if (n == 3 && seg[2] == "capture" && get) {
      std::optional<std::string> filter;
      if (const auto it = req.query.find("endpoint"); it != req.query.end() && !it->second.empty()) filter = it->second;
      exec_([&](Testbed& t) {
        try {
          out = {200, t.export_capture(filter ? std::optional<std::string_view>(*filter) : std::nullopt),
                 "application/x-ndjson"};
        } catch (const Error& e) {
          out = error(404, e.what());
        }
      });
      return out;
    }

    if (n == 3 && seg[2] == "network" && get) {
      exec_([&](Testbed& t) {
        json endpoints = json::array();
        for (const auto& e : t.endpoints()) endpoints.push_back({{"id", e.id}, {"kind", net::to_string(e.kind)}});
        json bridges = json::array();
        for (const auto& b : bridges_) bridges.push_back({{"endpoint", b.endpoint}, {"port", b.port}});
        const auto& policy = t.network().policy();
        out = reply(200, {{"endpoints", std::move(endpoints)},
                          {"bridges", std::move(bridges)},
                          {"attacker", t.attacker_provisioned()},
                          {"now_ms", t.now_ms()},
                          {"policy",
                           {{"latency_min_ms", policy.latency_min_ms},
                            {"latency_max_ms", policy.latency_max_ms},
                            {"drop_probability", policy.drop_probability},
                            {"seed", policy.seed}}}});
      });
      return out;
    }

    if (n == 4 && seg[2] == "network" && seg[3] == "replay" && post) {
      std::vector<net::CaptureRecord> records;
      try {
        records = net::parse_capture(req.body);
      } catch (const Error& e) {
        return error(400, e.what());
      }
      exec_([&](Testbed& t) {
        if (!t.attacker_provisioned()) {
          out = error(409, "attacker endpoint not provisioned");
          return;
        }
        try {
          const auto start = t.now_ms() + t.tick_ms();
          const auto count = t.replay(records, start);
          out = reply(200, {{"scheduled", count}, {"start_ms", start}});
        } catch (const Error& e) {
          out = error(400, e.what());
        }
      });
      return out;
    }
  } catch (const Error& e) {
    return error(e.kind() == ErrorKind::lifecycle ? 503 : 500, e.what());
  }
  return out;
}

}  // namespace k4i::telemetry
