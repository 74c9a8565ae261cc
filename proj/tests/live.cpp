#include "live.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <regex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

extern char** environ;

namespace k4i::test {

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

}  // namespace

CommandResult run_command(const std::vector<std::string>& argv) {
  std::string cmd;
  for (const auto& a : argv) cmd += shell_quote(a) + " ";
  cmd += "2>&1";
  CommandResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (p == nullptr) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.output.append(buf, n);
  const int status = pclose(p);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

LiveTestbed::LiveTestbed(const std::string& binary, const std::vector<std::string>& run_args) {
  int fds[2];
  if (pipe(fds) != 0) return;
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, fds[0]);
  std::vector<std::string> args{binary, "run"};
  args.insert(args.end(), run_args.begin(), run_args.end());
  std::vector<char*> cargs;
  for (auto& a : args) cargs.push_back(a.data());
  cargs.push_back(nullptr);
  pid_t pid;
  const int rc = posix_spawn(&pid, binary.c_str(), &actions, nullptr, cargs.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  close(fds[1]);
  if (rc != 0) {
    close(fds[0]);
    return;
  }
  pid_ = pid;
  out_fd_ = fds[0];

  const std::regex rest_line(R"(REST http://[^:]+:(\d+)/api/v1)");
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
  while (std::chrono::steady_clock::now() < deadline) {
    pollfd pfd{out_fd_, POLLIN, 0};
    if (poll(&pfd, 1, 100) <= 0) continue;
    char buf[1024];
    const auto n = read(out_fd_, buf, sizeof buf);
    if (n <= 0) break;
    banner_.append(buf, static_cast<std::size_t>(n));
    std::smatch m;
    if (std::regex_search(banner_, m, rest_line)) {
      port_ = std::stoi(m[1]);
      break;
    }
  }
  // Keep the pipe from filling up; the child prints its summary on exit.
  fcntl(out_fd_, F_SETFL, O_NONBLOCK);
}

LiveTestbed::~LiveTestbed() {
  if (pid_ > 0) {
    kill(pid_, SIGTERM);
    int status = 0;
    for (int i = 0; i < 100; ++i) {
      if (waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    if (pid_ > 0) {
      kill(pid_, SIGKILL);
      waitpid(pid_, &status, 0);
    }
  }
  if (out_fd_ >= 0) close(out_fd_);
}

namespace {

using nlohmann::json;

class Suite {
 public:
  std::vector<ContractCheck> checks;

  void expect(const std::string& name, bool ok, const std::string& detail = "") {
    checks.push_back({name, ok, ok ? "" : detail});
  }

  void expect_cli(const std::string& name, const CommandResult& r, int exit_code, const std::string& needle = "") {
    const bool ok = r.exit_code == exit_code && (needle.empty() || r.output.find(needle) != std::string::npos);
    expect(name, ok, "exit " + std::to_string(r.exit_code) + ", output: " + r.output);
  }
};

bool eventually(const std::function<bool()>& f, std::chrono::milliseconds within = std::chrono::milliseconds(2000)) {
  const auto deadline = std::chrono::steady_clock::now() + within;
  while (std::chrono::steady_clock::now() < deadline) {
    if (f()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  return f();
}

json get_json(httplib::Client& c, const std::string& path, int* status = nullptr) {
  auto r = c.Get(path);
  if (status) *status = r ? r->status : -1;
  if (!r) return json();
  return json::parse(r->body, nullptr, false);
}

int post_status(httplib::Client& c, const std::string& path, const std::string& body, std::string* out = nullptr) {
  auto r = c.Post(path, body, "application/json");
  if (!r) return -1;
  if (out) *out = r->body;
  return r->status;
}

void rest_checks(Suite& s, httplib::Client& c) {
  int st = 0;
  auto panels = get_json(c, "/api/v1/panels", &st);
  s.expect("GET /api/v1/panels lists panel-1", st == 200 && panels.is_array() && panels.size() == 1 &&
                                                   panels[0]["id"] == "panel-1",
           panels.dump());

  auto plcs = get_json(c, "/api/v1/panels/panel-1/plcs", &st);
  bool ports = plcs.is_array() && plcs.size() == 3;
  if (ports)
    for (const auto& p : plcs) ports = ports && p.contains("bridge_port") && p["bridge_port"].is_number();
  s.expect("GET /api/v1/panels/{panel}/plcs lists 3 PLCs with bridge ports", st == 200 && ports, plcs.dump());

  auto regs = get_json(c, "/api/v1/panels/1/plcs/slave-1/registers", &st);
  s.expect("GET .../registers returns the register map", st == 200 && !regs.is_discarded() && !regs.empty(),
           regs.dump());

  auto pts = get_json(c, "/api/v1/panels/1/plcs/master/points", &st);
  s.expect("GET .../points lists the master's points", st == 200 && pts.is_array() && pts.size() >= 9, pts.dump());

  auto temp = get_json(c, "/api/v1/panels/1/plcs/slave-1/points/temp1", &st);
  s.expect("GET .../points/temp1 reads 25.00 °C", st == 200 && temp.value("display", "") == "25.00 °C", temp.dump());

  s.expect("POST key_switch {value:true} -> 200",
           post_status(c, "/api/v1/panels/1/plcs/master/points/key_switch", R"({"value":true})") == 200);
  s.expect("key_switch drives master led1 on the next scan", eventually([&] {
             return get_json(c, "/api/v1/panels/1/plcs/master/points/led1").value("value", false) == true;
           }));
  s.expect("POST temp1 {value:50} -> 409",
           post_status(c, "/api/v1/panels/1/plcs/slave-1/points/temp1", R"({"value":50})") == 409);
  s.expect("POST with a malformed body -> 400",
           post_status(c, "/api/v1/panels/1/plcs/master/points/key_switch", "{oops") == 400);
  s.expect("POST to an unknown point -> 404",
           post_status(c, "/api/v1/panels/1/plcs/master/points/nope", R"({"value":true})") == 404);
  get_json(c, "/api/v1/unknown", &st);
  s.expect("unknown path -> 404", st == 404);

  auto game = get_json(c, "/api/v1/game/state", &st);
  s.expect("GET /api/v1/game/state", st == 200 && game.contains("levels") && game.contains("score"), game.dump());
  std::string body;
  const int fs = post_status(c, "/api/v1/game/flags", R"({"level":"first-light","flag":"wrong"})", &body);
  s.expect("POST /api/v1/game/flags rejects a locked or wrong flag",
           fs == 200 && json::parse(body, nullptr, false).value("result", "") == "rejected", body);
  s.expect("POST /api/v1/game/flags unknown level -> 400",
           post_status(c, "/api/v1/game/flags", R"({"level":"zzz","flag":"x"})") == 400);

  auto snap = get_json(c, "/api/v1/snapshot", &st);
  s.expect("GET /api/v1/snapshot carries digests",
           st == 200 && snap.contains("digest") && snap.contains("state_digest") && snap.contains("panels"));

  auto net = get_json(c, "/api/v1/network", &st);
  s.expect("GET /api/v1/network reports the attacker and bridges",
           st == 200 && net.value("attacker", false) && net["bridges"].size() == 3, net.dump());

  auto cap = c.Get("/api/v1/capture?endpoint=panel-1/slave-1");
  bool cap_ok = cap && cap->status == 200;
  if (cap_ok) {
    std::istringstream in(cap->body);
    std::string line;
    while (std::getline(in, line)) {
      const auto j = json::parse(line, nullptr, false);
      cap_ok = cap_ok && !j.is_discarded() && (j["src"] == "panel-1/slave-1" || j["dst"] == "panel-1/slave-1");
    }
  }
  s.expect("GET /api/v1/capture?endpoint= filters by endpoint", cap_ok);

  std::string replay_body;
  const int rs = post_status(c, "/api/v1/network/replay",
                             R"({"ts_ms":0,"src":"attacker","dst":"panel-1/slave-2","dropped":false,"payload_hex":"00090000000601050002ff00"})",
                             &replay_body);
  s.expect("POST /api/v1/network/replay schedules attacker frames",
           rs == 200 && json::parse(replay_body, nullptr, false).value("scheduled", 0) == 1, replay_body);

  std::string sse;
  auto sr = c.Get("/api/v1/stream?pattern=k4i/panel/1/plc/slave-1/point/temp1&limit=1",
                  [&](const char* data, std::size_t len) {
                    sse.append(data, len);
                    return true;
                  });
  bool sse_ok = sr && sr->status == 200;
  if (sse_ok) {
    const auto start = sse.find("data: ");
    const auto end = sse.find("\n\n", start);
    sse_ok = start != std::string::npos && end != std::string::npos;
    if (sse_ok) {
      const auto j = json::parse(sse.substr(start + 6, end - start - 6), nullptr, false);
      sse_ok = !j.is_discarded() && j["topic"] == "k4i/panel/1/plc/slave-1/point/temp1" && j["retained"] == true;
    }
  }
  s.expect("GET /api/v1/stream delivers the retained value first", sse_ok, sse);
  get_json(c, "/api/v1/stream?pattern=k4i/%23/bad", &st);
  s.expect("GET /api/v1/stream with a malformed pattern -> 400", st == 400);
}

void cli_checks(Suite& s, const std::string& k4i, const std::string& ep, const std::string& tmp) {
  const std::vector<std::string> base{k4i, "--endpoint", ep};
  auto cli = [&](std::initializer_list<std::string> args) {
    auto v = base;
    v.insert(v.end(), args);
    return run_command(v);
  };

  s.expect_cli("k4i points get panel-1 slave-1 temp1", cli({"points", "get", "panel-1", "slave-1", "temp1"}), 0,
               "25.00 °C");
  s.expect_cli("k4i points set panel-1 master key_switch true", cli({"points", "set", "panel-1", "master", "key_switch", "true"}), 0);
  s.expect_cli("k4i points set panel-1 slave-1 temp1 50 -> exit 1", cli({"points", "set", "panel-1", "slave-1", "temp1", "50"}), 1);
  s.expect_cli("k4i points list panel-1 slave-1", cli({"points", "list", "panel-1", "slave-1"}), 0, "temp1");
  s.expect_cli("k4i points map panel-1 slave-1", cli({"points", "map", "panel-1", "slave-1"}), 0, "power_led");

  const auto lj = cli({"points", "list", "panel-1", "slave-1", "--json"});
  s.expect("k4i points list --json parses", lj.exit_code == 0 && json::parse(lj.output, nullptr, false).is_array(), lj.output);
  const auto gj = cli({"points", "get", "panel-1", "slave-1", "temp1", "--json"});
  s.expect("k4i points get --json parses", gj.exit_code == 0 && json::parse(gj.output, nullptr, false).value("name", "") == "temp1", gj.output);
  const auto mj = cli({"points", "map", "panel-1", "slave-1", "--json"});
  s.expect("k4i points map --json parses", mj.exit_code == 0 && !json::parse(mj.output, nullptr, false).is_discarded(), mj.output);
  const auto sj = cli({"snapshot", "--json"});
  s.expect("k4i snapshot --json parses", sj.exit_code == 0 && json::parse(sj.output, nullptr, false).contains("panels"), sj.output.substr(0, 400));
  s.expect_cli("k4i snapshot", cli({"snapshot"}), 0, "slave-2");

  s.expect_cli("k4i attack write-coil slave-1 0 on", cli({"attack", "write-coil", "slave-1", "0", "on"}), 0);
  s.expect("write-coil slave-1 0 on turns the victim's led1 on", eventually([&] {
             return cli({"points", "get", "panel-1", "slave-1", "led1"}).output.find("true") != std::string::npos;
           }));
  s.expect_cli("k4i attack raw with a malformed PDU prints the exception",
               cli({"attack", "raw", "slave-2", "000500000003010500"}), 0, "exception");
  const auto wj = cli({"attack", "write-coil", "slave-1", "1", "off", "--json"});
  s.expect("k4i attack write-coil --json parses", wj.exit_code == 0 && !json::parse(wj.output, nullptr, false).is_discarded(), wj.output);

  const std::string cap_file = tmp + "/capture.jsonl";
  s.expect_cli("k4i capture export --endpoint attacker --out", cli({"capture", "export", "--endpoint", "attacker", "--out", cap_file}), 0);
  std::ifstream cap_in(cap_file);
  std::string first_line;
  std::getline(cap_in, first_line);
  s.expect("exported capture is JSON Lines", !json::parse(first_line, nullptr, false).is_discarded(), first_line);
  s.expect_cli("k4i capture export to stdout", cli({"capture", "export"}), 0, "payload_hex");
  s.expect_cli("k4i attack replay <capture>", cli({"attack", "replay", cap_file}), 0);

  s.expect_cli("k4i game state", cli({"game", "state"}), 0, "first-light");
  const auto gsj = cli({"game", "state", "--json"});
  s.expect("k4i game state --json parses", gsj.exit_code == 0 && json::parse(gsj.output, nullptr, false).contains("levels"), gsj.output);
  // first-light needs led3 on slave-2, which only the network can switch.
  cli({"attack", "write-coil", "slave-2", "2", "on"});
  const bool met = eventually([&] {
    return cli({"game", "state", "--json"}).output.find("flag_at") != std::string::npos;
  });
  s.expect("first-light condition met after the coil write", met);
  s.expect_cli("k4i game submit correct flag", cli({"game", "submit", "first-light", "K4I{first_light}"}), 0, "Accepted (+10)");
  s.expect_cli("k4i game submit duplicate", cli({"game", "submit", "first-light", "K4I{first_light}"}), 1, "Rejected: duplicate");
  s.expect_cli("k4i game submit wrong flag", cli({"game", "submit", "end-of-travel", "nope"}), 1, "Rejected");

  // K4I_ENDPOINT stands in for --endpoint.
  setenv("K4I_ENDPOINT", ep.c_str(), 1);
  s.expect_cli("K4I_ENDPOINT selects the testbed", run_command({k4i, "snapshot"}), 0);
  unsetenv("K4I_ENDPOINT");
}

}  // namespace

std::vector<ContractCheck> run_contract_suite(const std::string& k4i, const std::string& data) {
  Suite s;
  const auto tmp = (std::filesystem::temp_directory_path() / ("k4i-contract-" + std::to_string(getpid()))).string();
  std::filesystem::create_directories(tmp);

  {
    LiveTestbed live(k4i, {data + "/scenarios/default-panel.json", "--realtime", "--rest-port", "0", "--bridge-base", "0"});
    s.expect("live default scenario starts", live.ready(), live.banner());
    if (live.ready()) {
      httplib::Client c("127.0.0.1", live.port());
      c.set_read_timeout(5);
      rest_checks(s, c);
      cli_checks(s, k4i, live.endpoint(), tmp);
    }
  }
  {
    LiveTestbed bare(k4i, {data + "/scenarios/classroom-16.json", "--realtime", "--rest-port", "0", "--no-bridges"});
    s.expect("live scenario without attacker or game starts", bare.ready(), bare.banner());
    if (bare.ready()) {
      const std::vector<std::string> base{k4i, "--endpoint", bare.endpoint()};
      auto with = [&](std::initializer_list<std::string> args) {
        auto v = base;
        v.insert(v.end(), args);
        return run_command(v);
      };
      s.expect_cli("attack without attacker -> exit 1", with({"attack", "write-coil", "slave-1", "0", "on"}), 1,
                   "attacker endpoint not provisioned");
      s.expect_cli("attack replay without attacker -> exit 1", with({"attack", "replay", tmp + "/capture.jsonl"}), 1,
                   "attacker endpoint not provisioned");
      s.expect_cli("game state with no game -> exit 1", with({"game", "state"}), 1);
      s.expect_cli("game submit with no game -> exit 1", with({"game", "submit", "a", "b"}), 1);
      httplib::Client c("127.0.0.1", bare.port());
      int st = 0;
      get_json(c, "/api/v1/game/state", &st);
      s.expect("GET /api/v1/game/state with no game -> 404", st == 404);
      s.expect("POST /api/v1/network/replay without attacker -> 409",
               post_status(c, "/api/v1/network/replay",
                           R"({"ts_ms":0,"src":"attacker","dst":"panel-1/slave-1","dropped":false,"payload_hex":"00"})") == 409);
    }
  }

  s.expect_cli("k4i run <scenario> --fast exits 0", run_command({k4i, "run", data + "/scenarios/default-panel.json", "--fast", "1000"}), 0,
               "3 PLCs stepped");
  const auto rj = run_command({k4i, "run", data + "/scenarios/attack-demo.json", "--fast", "1000", "--json"});
  s.expect("k4i run --json parses", rj.exit_code == 0 && json::parse(rj.output.substr(rj.output.find('{')), nullptr, false).contains("state_digest"), rj.output);
  s.expect_cli("k4i run missing file -> exit 2", run_command({k4i, "run", data + "/scenarios/missing.json", "--fast", "10"}), 2);
  s.expect_cli("k4i run with a bad duration -> exit 1", run_command({k4i, "run", data + "/scenarios/default-panel.json", "--fast", "15"}), 1);
  s.expect_cli("k4i without a subcommand -> usage exit 2", run_command({k4i}), 2);
  s.expect_cli("k4i points get against a dead endpoint -> exit 1",
               run_command({k4i, "--endpoint", "127.0.0.1:1", "points", "get", "panel-1", "slave-1", "temp1"}), 1);

  std::filesystem::remove_all(tmp);
  return s.checks;
}

}  // namespace k4i::test
