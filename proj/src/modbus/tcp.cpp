#include "k4i/modbus/tcp.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "k4i/error.hpp"

namespace k4i::modbus {

namespace {

std::int64_t steady_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

TcpChannel::TcpChannel(const std::string& host, std::uint16_t port, std::int64_t connect_timeout_ms) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || res == nullptr) {
    throw Error(ErrorKind::transport, "cannot resolve " + host);
  }
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd_ < 0) {
    freeaddrinfo(res);
    throw Error(ErrorKind::transport, std::string("socket: ") + std::strerror(errno));
  }
  const int flags = fcntl(fd_, F_GETFL, 0);
  fcntl(fd_, F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(fd_, res->ai_addr, res->ai_addrlen);
  freeaddrinfo(res);
  if (rc < 0 && errno == EINPROGRESS) {
    pollfd pfd{fd_, POLLOUT, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(connect_timeout_ms));
    int err = ETIMEDOUT;
    if (ready == 1) {
      socklen_t len = sizeof err;
      getsockopt(fd_, SOL_SOCKET, SO_ERROR, &err, &len);
    }
    rc = err == 0 ? 0 : -1;
    errno = err;
  }
  if (rc < 0) {
    const std::string reason = std::strerror(errno);
    ::close(fd_);
    fd_ = -1;
    throw Error(ErrorKind::transport, "connect to " + host + ":" + std::to_string(port) + " failed: " + reason);
  }
  fcntl(fd_, F_SETFL, flags);
  int one = 1;
  setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

TcpChannel::~TcpChannel() {
  if (fd_ >= 0) ::close(fd_);
}

void TcpChannel::send(const Bytes& bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const auto n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) throw Error(ErrorKind::transport, std::string("send failed: ") + std::strerror(errno));
    sent += static_cast<std::size_t>(n);
  }
}

std::optional<Bytes> TcpChannel::receive(std::int64_t deadline_ms) {
  for (;;) {
    const auto decoded = decode_frame(buffer_);
    if (decoded.status == DecodeStatus::ok) {
      Bytes frame(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(decoded.consumed));
      buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(decoded.consumed));
      return frame;
    }
    if (decoded.status == DecodeStatus::protocol_error) {
      buffer_.clear();
      throw Error(ErrorKind::protocol, decoded.error);
    }
    const auto remaining = deadline_ms - now_ms();
    if (remaining <= 0) return std::nullopt;
    pollfd pfd{fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(remaining));
    if (rc == 0) return std::nullopt;
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::transport, std::string("poll failed: ") + std::strerror(errno));
    }
    std::uint8_t chunk[512];
    const auto n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n == 0) throw Error(ErrorKind::transport, "connection closed by peer");
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorKind::transport, std::string("recv failed: ") + std::strerror(errno));
    }
    buffer_.insert(buffer_.end(), chunk, chunk + n);
  }
}

std::int64_t TcpChannel::now_ms() { return steady_ms(); }

}  // namespace k4i::modbus
