#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "k4i/orchestrator/host.hpp"
#include "k4i/orchestrator/testbed.hpp"

namespace k4i::telemetry {

struct RestRequest {
  std::string method;
  std::string path;
  std::string body;
  std::map<std::string, std::string> query;
};

struct RestResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Runs a function against the testbed at a point between ticks.
using Executor = std::function<void(const std::function<void(orchestrator::Testbed&)>&)>;

Executor host_executor(orchestrator::Host& host);
/// Calls straight into a testbed owned by the calling thread.
Executor direct_executor(orchestrator::Testbed& testbed);

/// The /api/v1 resource table, without any HTTP plumbing.
class RestApi {
 public:
  explicit RestApi(Executor executor, std::vector<orchestrator::BridgeInfo> bridges = {});

  [[nodiscard]] RestResponse handle(const RestRequest& request) const;

 private:
  Executor exec_;
  std::vector<orchestrator::BridgeInfo> bridges_;
};

}  // namespace k4i::telemetry
