#pragma once

#include <string>
#include <vector>

namespace k4i::test {

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

/// Runs a command to completion through the shell, quoting every argument.
CommandResult run_command(const std::vector<std::string>& argv);

/// A `k4i run` child process serving REST on a port it picked itself.
class LiveTestbed {
 public:
  LiveTestbed(const std::string& binary, const std::vector<std::string>& run_args);
  ~LiveTestbed();
  LiveTestbed(const LiveTestbed&) = delete;
  LiveTestbed& operator=(const LiveTestbed&) = delete;

  [[nodiscard]] bool ready() const noexcept { return port_ > 0; }
  [[nodiscard]] int port() const noexcept { return port_; }
  [[nodiscard]] std::string endpoint() const { return "127.0.0.1:" + std::to_string(port_); }
  [[nodiscard]] const std::string& banner() const noexcept { return banner_; }

 private:
  int pid_ = -1;
  int out_fd_ = -1;
  int port_ = 0;
  std::string banner_;
};

struct ContractCheck {
  std::string name;
  bool ok = false;
  std::string detail;
};

/// Exercises every REST route and CLI subcommand against live testbeds.
std::vector<ContractCheck> run_contract_suite(const std::string& binary, const std::string& data_dir);

}  // namespace k4i::test
