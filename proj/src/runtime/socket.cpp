/* Copyright 2026 The IMCE Emulator Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "imce/runtime/socket.h"

#include <arpa/inet.h>
#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <thread>
#include <unistd.h>

#include "imce/errors.h"

namespace imce {

namespace {

std::string err(const std::string &what) {
  return what + ": " + std::strerror(errno);
}

sockaddr_in resolve(const Endpoint &ep) {
  sockaddr_in a{};
  a.sin_family = AF_INET;
  a.sin_port = htons(ep.port);
  std::string host = ep.host.empty() || ep.host == "localhost" ? "127.0.0.1" : ep.host;
  if (inet_pton(AF_INET, host.c_str(), &a.sin_addr) == 1)
    return a;
  addrinfo hints{}, *res = nullptr;
  hints.ai_family = AF_INET;
  if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res)
    throw ConfigError("cannot resolve host '" + ep.host + "'");
  a.sin_addr = reinterpret_cast<sockaddr_in *>(res->ai_addr)->sin_addr;
  freeaddrinfo(res);
  return a;
}

} // namespace

Endpoint parse_endpoint(const std::string &s) {
  auto colon = s.rfind(':');
  if (colon == std::string::npos)
    throw ConfigError("address '" + s + "' is not host:port");
  Endpoint ep;
  ep.host = colon == 0 ? "127.0.0.1" : s.substr(0, colon);
  try {
    size_t used = 0;
    int port = std::stoi(s.substr(colon + 1), &used);
    if (used != s.size() - colon - 1 || port < 0 || port > 65535)
      throw std::out_of_range("port");
    ep.port = static_cast<uint16_t>(port);
  } catch (const std::exception &) {
    throw ConfigError("bad port in address '" + s + "'");
  }
  return ep;
}

Connection::Connection(int fd) : fd_(fd) {
  int one = 1;
  setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

Connection::~Connection() {
  if (fd_ >= 0)
    ::close(fd_);
}

std::unique_ptr<Connection> Connection::connect(const Endpoint &ep,
                                                std::chrono::milliseconds timeout) {
  const sockaddr_in addr = resolve(ep);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0)
      throw IOError(err("socket"));
    if (::connect(fd, reinterpret_cast<const sockaddr *>(&addr), sizeof(addr)) == 0)
      return std::make_unique<Connection>(fd);
    const int e = errno;
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline)
      throw TimeoutError("cannot connect to " + ep.str() + ": " + std::strerror(e));
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

void Connection::send(const ComMessage &m) {
  if (m.payload.size() > kMaxPayload)
    throw ProtocolError("payload exceeds the frame limit");
  uint8_t header[kHeaderSize];
  encode_header(m, header);
  std::lock_guard lk(send_mu_);
  auto write_all = [&](const uint8_t *p, size_t n) {
    while (n > 0) {
      ssize_t w = ::send(fd_, p, n, MSG_NOSIGNAL);
      if (w < 0) {
        if (errno == EINTR)
          continue;
        throw IOError(err("send"));
      }
      p += w;
      n -= static_cast<size_t>(w);
      bytes_sent_ += static_cast<uint64_t>(w);
    }
  };
  if (m.payload.size() <= 4096) {
    // Small frames go out in one segment.
    uint8_t buf[kHeaderSize + 4096];
    std::memcpy(buf, header, kHeaderSize);
    if (!m.payload.empty())
      std::memcpy(buf + kHeaderSize, m.payload.data(), m.payload.size());
    write_all(buf, kHeaderSize + m.payload.size());
  } else {
    write_all(header, kHeaderSize);
    write_all(m.payload.data(), m.payload.size());
  }
}

std::optional<ComMessage>
Connection::receive(std::optional<std::chrono::milliseconds> timeout) {
  timed_out_ = false;
  const auto deadline =
      timeout ? std::chrono::steady_clock::now() + *timeout
              : std::chrono::steady_clock::time_point::max();
  uint8_t buf[65536];
  for (;;) {
    if (auto m = decoder_.next())
      return m;
    if (timeout) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) {
        timed_out_ = true;
        return std::nullopt;
      }
      pollfd pfd{fd_, POLLIN, 0};
      int r = ::poll(&pfd, 1, static_cast<int>(left.count()));
      if (r < 0 && errno != EINTR)
        throw IOError(err("poll"));
      if (r <= 0)
        continue;
    }
    ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
    if (n < 0) {
      if (errno == EINTR)
        continue;
      if (errno == ECONNRESET || errno == EBADF || errno == ENOTCONN)
        return std::nullopt;
      throw IOError(err("recv"));
    }
    if (n == 0) {
      if (decoder_.buffered() > 0)
        throw ProtocolError("connection closed inside a frame");
      return std::nullopt;
    }
    bytes_received_ += static_cast<uint64_t>(n);
    decoder_.feed({buf, static_cast<size_t>(n)});
  }
}

void Connection::shutdown() { ::shutdown(fd_, SHUT_RDWR); }

Listener::Listener(const Endpoint &ep) {
  fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd_ < 0)
    throw IOError(err("socket"));
  int one = 1;
  setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = resolve(ep);
  if (::bind(fd_, reinterpret_cast<sockaddr *>(&addr), sizeof(addr)) < 0) {
    std::string m = err("bind " + ep.str());
    ::close(fd_);
    throw IOError(m);
  }
  if (::listen(fd_, 128) < 0) {
    std::string m = err("listen");
    ::close(fd_);
    throw IOError(m);
  }
  socklen_t len = sizeof(addr);
  getsockname(fd_, reinterpret_cast<sockaddr *>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

Listener::~Listener() { close(); }

std::unique_ptr<Connection> Listener::accept() {
  for (;;) {
    int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd >= 0)
      return std::make_unique<Connection>(fd);
    if (errno == EINTR || errno == ECONNABORTED)
      continue;
    return nullptr;
  }
}

void Listener::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

} // namespace imce
