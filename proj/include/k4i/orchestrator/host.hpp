#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <mutex>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "k4i/orchestrator/testbed.hpp"

namespace k4i::orchestrator {

struct HostOptions {
  bool realtime = false;
  bool bridges = false;
  std::string bridge_host = "127.0.0.1";
  int bridge_base_port = 15020;  // 0 picks ephemeral ports
  std::chrono::milliseconds bridge_timeout{2000};
};

HostOptions host_options_for(const ScenarioConfig& config);

struct BridgeInfo {
  std::string endpoint;
  int port = 0;
};

class BridgeServer;

/// Runs a Testbed on its own thread. Everything else talks to it through a
/// serialized command queue, so reads always see the state between two ticks.
class Host {
 public:
  /// Binds the Modbus TCP bridges right away; a port in use is a startup Error.
  Host(std::unique_ptr<Testbed> testbed, HostOptions options);
  ~Host();

  Host(const Host&) = delete;
  Host& operator=(const Host&) = delete;

  void start();
  void stop();

  /// Runs f on the simulation thread between ticks and waits for its result.
  template <typename F>
  auto query(F&& f) -> std::invoke_result_t<F, Testbed&> {
    using R = std::invoke_result_t<F, Testbed&>;
    auto task = std::make_shared<std::packaged_task<R()>>([this, fn = std::forward<F>(f)]() mutable {
      return fn(*testbed_);
    });
    auto result = task->get_future();
    post([task] { (*task)(); });
    return result.get();
  }

  /// Fast-forward: runs duration_ms of simulated time as fast as possible,
  /// chunked so queued commands interleave. Blocks until done.
  void advance(std::int64_t duration_ms);
  /// Realtime: blocks until the simulated clock reaches t_ms.
  void wait_until_sim(std::int64_t t_ms);

  void pause();
  void resume();
  [[nodiscard]] bool paused() const noexcept { return paused_; }
  [[nodiscard]] bool realtime() const noexcept { return options_.realtime; }
  [[nodiscard]] std::uint64_t overruns() const noexcept { return overruns_; }

  [[nodiscard]] const std::vector<BridgeInfo>& bridges() const noexcept { return bridge_info_; }
  [[nodiscard]] telemetry::TopicBus& bus() noexcept { return testbed_->bus(); }

  /// Bridge-facing: sends a frame into the simulated network and waits for the
  /// reply frame with the same transaction id.
  std::optional<Bytes> bridge_request(const std::string& endpoint, Bytes frame);

 private:
  void post(std::function<void()> task);
  void loop();
  void on_delivery(const net::Delivery& d);

  std::unique_ptr<Testbed> testbed_;
  HostOptions options_;
  std::string bridge_source_;

  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> tasks_;
  bool stopping_ = false;
  std::thread thread_;
  std::atomic<std::thread::id> loop_id_{};
  std::atomic<bool> paused_{false};
  std::atomic<std::uint64_t> overruns_{0};
  std::atomic<std::int64_t> sim_now_{0};

  struct Waiter {
    std::promise<Bytes> reply;
  };
  std::mutex waiters_mutex_;
  std::map<std::pair<std::string, std::uint16_t>, std::shared_ptr<Waiter>> waiters_;
  std::uint16_t next_txn_ = 0;

  std::unique_ptr<BridgeServer> bridge_server_;
  std::vector<BridgeInfo> bridge_info_;
};

}  // namespace k4i::orchestrator
