// Copyright 2026 The bb84lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Frames (1-byte tag, 4-byte big-endian length, payload) over blocking TCP
// sockets.

#ifndef BB84LAB_NET_WIRE_HPP_
#define BB84LAB_NET_WIRE_HPP_

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

#include "bb84lab/protocol/message.hpp"

namespace bb84lab::net {

using protocol::Bytes;
using protocol::FramingError;
using protocol::Message;
using protocol::Tag;

inline constexpr std::size_t kFrameHeader = 5;
inline constexpr std::uint32_t kMaxPayload = 64u << 20;

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Bytes encode_frame(const Message& m) {
  if (m.payload.size() > kMaxPayload) throw FramingError("frame payload too large");
  Bytes out;
  out.reserve(kFrameHeader + m.payload.size());
  out.push_back(static_cast<std::uint8_t>(m.tag));
  const auto n = static_cast<std::uint32_t>(m.payload.size());
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
  out.insert(out.end(), m.payload.begin(), m.payload.end());
  return out;
}

// Parses one complete frame; throws FramingError on unknown tags, oversize
// lengths or a byte count that does not match the header.
inline Message decode_frame(const Bytes& frame) {
  if (frame.size() < kFrameHeader) throw FramingError("frame shorter than header");
  if (!protocol::valid_tag(frame[0])) throw FramingError("unknown tag " + std::to_string(frame[0]));
  std::uint32_t n = 0;
  for (int i = 1; i <= 4; ++i) n = (n << 8) | frame[static_cast<std::size_t>(i)];
  if (n > kMaxPayload) throw FramingError("frame length exceeds limit");
  if (frame.size() != kFrameHeader + n) throw FramingError("frame length mismatch");
  return {static_cast<Tag>(frame[0]), Bytes(frame.begin() + kFrameHeader, frame.end())};
}

// Owning socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      close();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void close() {
    if (fd_ >= 0) ::close(std::exchange(fd_, -1));
  }
  void shutdown_write() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
  }

  void write_all(const std::uint8_t* data, std::size_t n) {
    while (n > 0) {
      const ssize_t k = ::send(fd_, data, n, MSG_NOSIGNAL);
      if (k < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("send: ") + std::strerror(errno));
      }
      data += k;
      n -= static_cast<std::size_t>(k);
    }
  }

  // false on clean EOF before the first byte; throws on EOF mid-buffer.
  bool read_exact(std::uint8_t* data, std::size_t n) {
    std::size_t got = 0;
    while (got < n) {
      const ssize_t k = ::recv(fd_, data + got, n - got, 0);
      if (k < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("recv: ") + std::strerror(errno));
      }
      if (k == 0) {
        if (got == 0) return false;
        throw TransportError("connection closed mid-frame");
      }
      got += static_cast<std::size_t>(k);
    }
    return true;
  }

  void send_message(const Message& m) {
    const Bytes f = encode_frame(m);
    write_all(f.data(), f.size());
  }

  // The next frame as raw bytes, or nullopt on clean EOF.
  std::optional<Bytes> read_frame() {
    Bytes f(kFrameHeader);
    if (!read_exact(f.data(), kFrameHeader)) return std::nullopt;
    if (!protocol::valid_tag(f[0])) throw FramingError("unknown tag " + std::to_string(f[0]));
    std::uint32_t n = 0;
    for (int i = 1; i <= 4; ++i) n = (n << 8) | f[static_cast<std::size_t>(i)];
    if (n > kMaxPayload) throw FramingError("frame length exceeds limit");
    f.resize(kFrameHeader + n);
    if (n && !read_exact(f.data() + kFrameHeader, n)) throw TransportError("connection closed mid-frame");
    return f;
  }

  std::optional<Message> read_message() {
    auto f = read_frame();
    if (!f) return std::nullopt;
    return decode_frame(*f);
  }

  // Reads and discards until EOF or the timeout passes.
  void drain(std::chrono::milliseconds timeout = std::chrono::milliseconds(2000)) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    std::uint8_t buf[4096];
    while (fd_ >= 0) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) return;
      pollfd p{fd_, POLLIN, 0};
      const int r = ::poll(&p, 1, static_cast<int>(left.count()));
      if (r <= 0) return;
      const ssize_t k = ::recv(fd_, buf, sizeof buf, 0);
      if (k <= 0) return;
    }
  }

 private:
  int fd_ = -1;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  std::string to_string() const { return host + ":" + std::to_string(port); }

  // "host:port" or ":port" / "port" for loopback.
  static Endpoint parse(const std::string& text) {
    Endpoint e;
    const auto colon = text.rfind(':');
    std::string port = text;
    if (colon != std::string::npos) {
      if (colon > 0) e.host = text.substr(0, colon);
      port = text.substr(colon + 1);
    }
    try {
      std::size_t used = 0;
      const unsigned long v = std::stoul(port, &used);
      if (used != port.size() || v > 65535) throw std::invalid_argument("range");
      e.port = static_cast<std::uint16_t>(v);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad endpoint '" + text + "'");
    }
    return e;
  }
};

namespace detail {

inline sockaddr_in resolve(const Endpoint& e) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(e.port);
  if (::inet_pton(AF_INET, e.host.c_str(), &addr.sin_addr) == 1) return addr;
  addrinfo hints{}, *res = nullptr;
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (::getaddrinfo(e.host.c_str(), nullptr, &hints, &res) != 0 || !res) {
    throw TransportError("cannot resolve host " + e.host);
  }
  addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
  ::freeaddrinfo(res);
  return addr;
}

inline void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

}  // namespace detail

// Bound, listening socket. Port 0 picks a free port; port() reports it.
class Listener {
 public:
  explicit Listener(const Endpoint& e) {
    sock_ = Socket(::socket(AF_INET, SOCK_STREAM, 0));
    if (!sock_.valid()) throw TransportError(std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(sock_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr = detail::resolve(e);
    if (::bind(sock_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
      throw TransportError("bind " + e.to_string() + ": " + std::strerror(errno));
    }
    if (::listen(sock_.fd(), 4) != 0) throw TransportError(std::string("listen: ") + std::strerror(errno));
    socklen_t len = sizeof addr;
    ::getsockname(sock_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
    endpoint_ = {e.host, ntohs(addr.sin_port)};
  }

  const Endpoint& endpoint() const { return endpoint_; }
  std::uint16_t port() const { return endpoint_.port; }

  // Blocks for one connection; throws TransportError on timeout.
  Socket accept(std::chrono::milliseconds timeout = std::chrono::milliseconds(30000)) {
    pollfd p{sock_.fd(), POLLIN, 0};
    const int r = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (r <= 0) throw TransportError("accept: timed out");
    const int fd = ::accept(sock_.fd(), nullptr, nullptr);
    if (fd < 0) throw TransportError(std::string("accept: ") + std::strerror(errno));
    detail::set_nodelay(fd);
    return Socket(fd);
  }

 private:
  Socket sock_;
  Endpoint endpoint_;
};

// Connects, retrying while the peer is not yet listening.
inline Socket connect_to(const Endpoint& e, std::chrono::milliseconds timeout = std::chrono::milliseconds(10000)) {
  const sockaddr_in addr = detail::resolve(e);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    if (!s.valid()) throw TransportError(std::string("socket: ") + std::strerror(errno));
    if (::connect(s.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) {
      detail::set_nodelay(s.fd());
      return s;
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      throw TransportError("connect " + e.to_string() + ": " + std::strerror(errno));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

}  // namespace bb84lab::net

#endif  // BB84LAB_NET_WIRE_HPP_
