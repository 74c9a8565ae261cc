#include "k4i/orchestrator/host.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "k4i/error.hpp"
#include "k4i/modbus/codec.hpp"

namespace k4i::orchestrator {

HostOptions host_options_for(const ScenarioConfig& config) {
  HostOptions o;
  o.realtime = config.mode == ClockMode::realtime;
  o.bridges = config.network.bridges.enabled;
  o.bridge_host = config.network.bridges.host;
  o.bridge_base_port = config.network.bridges.base_port;
  return o;
}

/// One listening socket per PLC; each accepted connection gets its own thread
/// because a request blocks until the simulated reply comes back.
class BridgeServer {
 public:
  BridgeServer(Host& host, const std::string& bind_host, int base_port, const std::vector<std::string>& endpoints)
      : host_(host) {
    in_addr addr{};
    if (inet_pton(AF_INET, bind_host.c_str(), &addr) != 1)
      throw Error(ErrorKind::startup, "bridge host must be an IPv4 address: " + bind_host);
    for (std::size_t i = 0; i < endpoints.size(); ++i) {
      const int port = base_port == 0 ? 0 : base_port + static_cast<int>(i);
      if (port > 65535) {
        close_all();
        throw Error(ErrorKind::startup, "bridge port range exceeds 65535");
      }
      const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
      int one = 1;
      setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
      sockaddr_in sa{};
      sa.sin_family = AF_INET;
      sa.sin_addr = addr;
      sa.sin_port = htons(static_cast<std::uint16_t>(port));
      if (::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0 || ::listen(fd, 16) != 0) {
        const std::string reason = std::strerror(errno);
        ::close(fd);
        close_all();
        throw Error(ErrorKind::startup, "cannot bind bridge port " + std::to_string(port) + ": " + reason);
      }
      socklen_t len = sizeof sa;
      getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len);
      listeners_.push_back(fd);
      info_.push_back({endpoints[i], ntohs(sa.sin_port)});
    }
    if (::pipe(wake_) != 0) {
      close_all();
      throw Error(ErrorKind::startup, "cannot create wake pipe");
    }
  }

  ~BridgeServer() {
    stop();
    close_all();
    if (wake_[0] >= 0) ::close(wake_[0]);
    if (wake_[1] >= 0) ::close(wake_[1]);
  }

  [[nodiscard]] const std::vector<BridgeInfo>& info() const noexcept { return info_; }

  void start() {
    if (!acceptor_.joinable()) acceptor_ = std::thread([this] { accept_loop(); });
  }

  void stop() {
    if (stopping_.exchange(true)) return;
    if (wake_[1] >= 0) {
      const char c = 'x';
      [[maybe_unused]] const auto n = ::write(wake_[1], &c, 1);
    }
    if (acceptor_.joinable()) acceptor_.join();
    {
      std::lock_guard lock(mutex_);
      for (const int fd : connections_) ::shutdown(fd, SHUT_RDWR);
    }
    for (auto& t : workers_)
      if (t.joinable()) t.join();
    workers_.clear();
  }

 private:
  void close_all() {
    for (const int fd : listeners_) ::close(fd);
    listeners_.clear();
  }

  void accept_loop() {
    std::vector<pollfd> fds;
    for (const int fd : listeners_) fds.push_back({fd, POLLIN, 0});
    fds.push_back({wake_[0], POLLIN, 0});
    while (!stopping_) {
      if (::poll(fds.data(), fds.size(), -1) < 0) {
        if (errno == EINTR) continue;
        return;
      }
      if (fds.back().revents != 0) return;
      for (std::size_t i = 0; i + 1 < fds.size(); ++i) {
        if ((fds[i].revents & POLLIN) == 0) continue;
        const int conn = ::accept(fds[i].fd, nullptr, nullptr);
        if (conn < 0) continue;
        int one = 1;
        setsockopt(conn, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        std::lock_guard lock(mutex_);
        if (stopping_) {
          ::close(conn);
          return;
        }
        connections_.push_back(conn);
        workers_.emplace_back([this, conn, endpoint = info_[i].endpoint] { serve(conn, endpoint); });
      }
    }
  }

  void serve(int fd, const std::string& endpoint) {
    Bytes buffer;
    std::uint8_t chunk[1024];
    while (!stopping_) {
      const auto n = ::recv(fd, chunk, sizeof chunk, 0);
      if (n <= 0) break;
      buffer.insert(buffer.end(), chunk, chunk + n);
      bool open = true;
      while (!buffer.empty() && open) {
        const auto decoded = modbus::decode_frame(buffer);
        std::size_t take = 0;
        if (decoded.status == modbus::DecodeStatus::ok) take = decoded.consumed;
        else if (decoded.status == modbus::DecodeStatus::protocol_error) take = buffer.size();
        else break;
        Bytes datagram(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(take));
        buffer.erase(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(take));
        const auto reply = host_.bridge_request(endpoint, std::move(datagram));
        if (!reply) continue;
        std::size_t sent = 0;
        while (sent < reply->size()) {
          const auto m = ::send(fd, reply->data() + sent, reply->size() - sent, MSG_NOSIGNAL);
          if (m <= 0) {
            open = false;
            break;
          }
          sent += static_cast<std::size_t>(m);
        }
      }
      if (!open) break;
    }
    std::lock_guard lock(mutex_);
    std::erase(connections_, fd);
    ::close(fd);
  }

  Host& host_;
  std::vector<int> listeners_;
  std::vector<BridgeInfo> info_;
  int wake_[2] = {-1, -1};
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex mutex_;
  std::vector<int> connections_;
  std::vector<std::thread> workers_;
};

Host::Host(std::unique_ptr<Testbed> testbed, HostOptions options)
    : testbed_(std::move(testbed)), options_(std::move(options)) {
  bridge_source_ = std::string(testbed_->attacker_provisioned() ? attacker_endpoint : controller_endpoint);
  sim_now_ = testbed_->now_ms();
  if (options_.bridges) {
    std::vector<std::string> endpoints;
    for (const auto& e : testbed_->plcs()) endpoints.push_back(e.endpoint);
    bridge_server_ = std::make_unique<BridgeServer>(*this, options_.bridge_host, options_.bridge_base_port, endpoints);
    bridge_info_ = bridge_server_->info();
  }
  testbed_->set_delivery_hook([this](const net::Delivery& d) { on_delivery(d); });
}

Host::~Host() {
  stop();
  bridge_server_.reset();
}

void Host::start() {
  std::lock_guard lock(mutex_);
  if (thread_.joinable()) return;
  stopping_ = false;
  thread_ = std::thread([this] { loop(); });
  if (bridge_server_) bridge_server_->start();
}

void Host::stop() {
  if (bridge_server_) bridge_server_->stop();
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
  // Whatever is still queued will never run; fail it instead of hanging callers.
  std::deque<std::function<void()>> left;
  {
    std::lock_guard lock(mutex_);
    left.swap(tasks_);
  }
  for (auto& t : left) t();
}

void Host::post(std::function<void()> task) {
  if (std::this_thread::get_id() == loop_id_) {
    task();
    return;
  }
  {
    std::lock_guard lock(mutex_);
    if (!thread_.joinable() || stopping_) {
      // Not running: execute inline on the caller's thread.
      task();
      return;
    }
    tasks_.push_back(std::move(task));
  }
  cv_.notify_all();
}

void Host::loop() {
  loop_id_ = std::this_thread::get_id();
  using clock = std::chrono::steady_clock;
  const auto tick = std::chrono::milliseconds(testbed_->tick_ms());
  auto origin = clock::now();
  std::int64_t ticks_done = 0;
  bool was_paused = paused_;

  std::unique_lock lock(mutex_);
  while (true) {
    const bool ticking = options_.realtime && !paused_;
    if (ticking)
      cv_.wait_until(lock, origin + tick * (ticks_done + 1), [this] { return stopping_ || !tasks_.empty(); });
    else
      cv_.wait(lock, [this] { return stopping_ || !tasks_.empty(); });
    if (stopping_) break;

    std::deque<std::function<void()>> batch;
    batch.swap(tasks_);
    lock.unlock();
    for (auto& task : batch) {
      try {
        task();
      } catch (...) {
      }
    }

    if (options_.realtime) {
      if (paused_) {
        was_paused = true;
      } else {
        if (was_paused) {
          origin = clock::now() - tick * ticks_done;
          was_paused = false;
        }
        const auto due = (clock::now() - origin) / tick;
        const std::int64_t behind = static_cast<std::int64_t>(due) - ticks_done;
        if (behind > 1) overruns_ += static_cast<std::uint64_t>(behind - 1);
        for (std::int64_t k = 0; k < behind && !testbed_->torn_down(); ++k) testbed_->tick();
        if (behind > 0) ticks_done += behind;
      }
    }
    sim_now_ = testbed_->now_ms();
    lock.lock();
  }
  loop_id_ = std::thread::id{};
}

void Host::advance(std::int64_t duration_ms) {
  const std::int64_t tick = testbed_->tick_ms();
  if (duration_ms < 0 || duration_ms % tick != 0)
    throw Error(ErrorKind::validation, "duration must be a non-negative multiple of " + std::to_string(tick) + " ms");
  const std::int64_t chunk = std::max<std::int64_t>(tick, (100 / tick) * tick);
  for (std::int64_t done = 0; done < duration_ms;) {
    const std::int64_t step = std::min(chunk, duration_ms - done);
    query([step](Testbed& t) {
      t.run(step);
      return 0;
    });
    done += step;
    sim_now_ = query([](Testbed& t) { return t.now_ms(); });
  }
}

void Host::wait_until_sim(std::int64_t t_ms) {
  while (sim_now_ < t_ms) {
    {
      std::lock_guard lock(mutex_);
      if (!thread_.joinable() || stopping_) return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

void Host::pause() {
  query([this](Testbed&) {
    paused_ = true;
    return 0;
  });
}

void Host::resume() {
  query([this](Testbed&) {
    paused_ = false;
    return 0;
  });
  cv_.notify_all();
}

std::optional<Bytes> Host::bridge_request(const std::string& endpoint, Bytes frame) {
  if (frame.size() < 2) return std::nullopt;
  const std::uint8_t hi = frame[0];
  const std::uint8_t lo = frame[1];
  auto waiter = std::make_shared<Waiter>();
  std::uint16_t txn = 0;
  {
    std::lock_guard lock(waiters_mutex_);
    do {
      txn = static_cast<std::uint16_t>(0x8000 | (next_txn_++ & 0x7FFF));
    } while (waiters_.contains({endpoint, txn}));
    waiters_[{endpoint, txn}] = waiter;
  }
  frame[0] = static_cast<std::uint8_t>(txn >> 8);
  frame[1] = static_cast<std::uint8_t>(txn & 0xFF);
  auto reply = waiter->reply.get_future();
  const bool sent = query([&](Testbed& t) {
    try {
      t.send(bridge_source_, endpoint, frame);
      return true;
    } catch (const Error&) {
      return false;
    }
  });
  std::optional<Bytes> out;
  if (sent && reply.wait_for(options_.bridge_timeout) == std::future_status::ready) out = reply.get();
  {
    std::lock_guard lock(waiters_mutex_);
    waiters_.erase({endpoint, txn});
  }
  if (out && out->size() >= 2) {
    (*out)[0] = hi;
    (*out)[1] = lo;
  }
  return out;
}

void Host::on_delivery(const net::Delivery& d) {
  if (d.dst != bridge_source_ || d.payload.size() < 2) return;
  const auto txn = static_cast<std::uint16_t>((d.payload[0] << 8) | d.payload[1]);
  if ((txn & 0x8000) == 0) return;
  std::lock_guard lock(waiters_mutex_);
  const auto it = waiters_.find({d.src, txn});
  if (it == waiters_.end()) return;
  it->second->reply.set_value(d.payload);
  waiters_.erase(it);
}

}  // namespace k4i::orchestrator
