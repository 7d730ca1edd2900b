// Copyright 2026 The segvote Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "segvote/protocol.hpp"

#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <mutex>
#include <thread>

#include "segvote/error.hpp"

namespace segvote::protocol {
namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

int remaining_ms(Clock::time_point deadline) {
  const auto left =
      std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return left.count() < 0 ? 0 : static_cast<int>(left.count());
}

class FdChannel final : public LineChannel {
 public:
  FdChannel(int read_fd, int write_fd, pid_t child, bool socket)
      : read_fd_(read_fd), write_fd_(write_fd), child_(child), socket_(socket) {
    ignore_sigpipe();
    set_nonblocking(write_fd_);
    if (read_fd_ != write_fd_) set_nonblocking(read_fd_);
  }

  ~FdChannel() override {
    if (write_fd_ != read_fd_) ::close(write_fd_);
    ::close(read_fd_);
    if (child_ > 0) reap();
  }

  FdChannel(const FdChannel&) = delete;
  FdChannel& operator=(const FdChannel&) = delete;

  bool write_line(std::string_view line) override {
    std::string data(line);
    data.push_back('\n');
    const auto deadline = Clock::now() + std::chrono::seconds(30);
    std::size_t done = 0;
    while (done < data.size()) {
      const ssize_t n =
          socket_ ? ::send(write_fd_, data.data() + done, data.size() - done,
                           MSG_NOSIGNAL)
                  : ::write(write_fd_, data.data() + done, data.size() - done);
      if (n > 0) {
        done += static_cast<std::size_t>(n);
        continue;
      }
      if (n < 0 && errno == EINTR) continue;
      if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
        pollfd pfd{write_fd_, POLLOUT, 0};
        const int left = remaining_ms(deadline);
        if (left == 0) return false;
        if (::poll(&pfd, 1, left) < 0 && errno != EINTR) return false;
        if (pfd.revents & (POLLERR | POLLHUP | POLLNVAL)) return false;
        continue;
      }
      return false;
    }
    return true;
  }

  ReadStatus read_line(std::string& line, Timeout timeout) override {
    const auto deadline = Clock::now() + timeout;
    for (;;) {
      const auto nl = buffer_.find('\n', scanned_);
      if (nl != std::string::npos) {
        line.assign(buffer_, 0, nl);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        buffer_.erase(0, nl + 1);
        scanned_ = 0;
        return ReadStatus::kLine;
      }
      scanned_ = buffer_.size();
      if (eof_) return ReadStatus::kEof;

      pollfd pfd{read_fd_, POLLIN, 0};
      const int rc = ::poll(&pfd, 1, remaining_ms(deadline));
      if (rc < 0) {
        if (errno == EINTR) continue;
        eof_ = true;
        continue;
      }
      if (rc == 0) return ReadStatus::kTimeout;

      char chunk[65536];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n > 0) {
        buffer_.append(chunk, static_cast<std::size_t>(n));
      } else if (n == 0) {
        eof_ = true;
      } else if (errno != EINTR && errno != EAGAIN && errno != EWOULDBLOCK) {
        eof_ = true;
      }
    }
  }

 private:
  void reap() {
    // Our end of the child's stdin is already closed; give it a moment.
    for (int i = 0; i < 200; ++i) {
      int status = 0;
      if (::waitpid(child_, &status, WNOHANG) != 0) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(child_, SIGKILL);
    int status = 0;
    ::waitpid(child_, &status, 0);
  }

  int read_fd_;
  int write_fd_;
  pid_t child_;
  bool socket_;
  bool eof_ = false;
  std::string buffer_;
  std::size_t scanned_ = 0;
};

}  // namespace

std::unique_ptr<LineChannel> adopt_fds(int read_fd, int write_fd) {
  return std::make_unique<FdChannel>(read_fd, write_fd, -1, false);
}

std::unique_ptr<LineChannel> spawn_process(const std::string& command) {
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) {
    throw Error(ErrorCode::kScorerUnavailable, "pipe: " + std::string(std::strerror(errno)));
  }
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw Error(ErrorCode::kScorerUnavailable, "pipe: " + std::string(std::strerror(errno)));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
    throw Error(ErrorCode::kScorerUnavailable, "fork: " + std::string(std::strerror(errno)));
  }
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::signal(SIGPIPE, SIG_DFL);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::make_unique<FdChannel>(from_child[0], to_child[1], pid, false);
}

std::unique_ptr<LineChannel> connect_tcp(const std::string& host, int port,
                                         Timeout timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &found);
      rc != 0) {
    throw Error(ErrorCode::kScorerUnavailable,
                "resolve " + host + ": " + ::gai_strerror(rc));
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(found, ::freeaddrinfo);

  std::string last_error = "no addresses";
  for (addrinfo* ai = found; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC,
                            ai->ai_protocol);
    if (fd < 0) continue;
    set_nonblocking(fd);
    int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
    if (rc != 0 && errno == EINPROGRESS) {
      pollfd pfd{fd, POLLOUT, 0};
      rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
      if (rc == 1) {
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        rc = err == 0 ? 0 : -1;
        errno = err;
      } else {
        rc = -1;
        errno = ETIMEDOUT;
      }
    }
    if (rc == 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return std::make_unique<FdChannel>(fd, fd, -1, true);
    }
    last_error = std::strerror(errno);
    ::close(fd);
  }
  throw Error(ErrorCode::kScorerUnavailable,
              "connect " + host + ":" + service + ": " + last_error);
}

Endpoint parse_endpoint(std::string_view selector) {
  Endpoint ep{};
  if (selector.starts_with("exec:")) {
    ep.kind = Endpoint::Kind::kExec;
    ep.command = std::string(selector.substr(5));
    if (ep.command.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "exec: needs a command");
    }
    return ep;
  }
  if (selector.starts_with("tcp:")) {
    const auto rest = selector.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string_view::npos || colon == 0) {
      throw Error(ErrorCode::kInvalidArgument, "expected tcp:HOST:PORT");
    }
    ep.kind = Endpoint::Kind::kTcp;
    ep.host = std::string(rest.substr(0, colon));
    const auto port = rest.substr(colon + 1);
    const auto [ptr, ec] =
        std::from_chars(port.data(), port.data() + port.size(), ep.port);
    if (ec != std::errc{} || ptr != port.data() + port.size() || ep.port <= 0 ||
        ep.port > 65535) {
      throw Error(ErrorCode::kInvalidArgument, "bad port in " + std::string(selector));
    }
    return ep;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "endpoint must be exec:CMD or tcp:HOST:PORT, got " + std::string(selector));
}

std::unique_ptr<LineChannel> open_endpoint(const Endpoint& endpoint,
                                           Timeout timeout) {
  if (endpoint.kind == Endpoint::Kind::kExec) return spawn_process(endpoint.command);
  return connect_tcp(endpoint.host, endpoint.port, timeout);
}

Client::Client(std::unique_ptr<LineChannel> channel, Timeout timeout,
               std::size_t window)
    : channel_(std::move(channel)), timeout_(timeout), window_(window == 0 ? 1 : window) {}

void Client::fail_unavailable(const std::string& why) {
  dead_reason_ = why;
  throw Error(ErrorCode::kScorerUnavailable, why);
}

void Client::fail_protocol(const std::string& why) {
  // The stream can no longer be trusted to be in sync.
  dead_reason_ = "protocol error earlier: " + why;
  throw Error(ErrorCode::kScorerProtocolError, why);
}

json Client::read_reply(bool in_handshake) {
  std::string line;
  switch (channel_->read_line(line, timeout_)) {
    case LineChannel::ReadStatus::kEof:
      fail_unavailable("peer closed the stream");
    case LineChannel::ReadStatus::kTimeout:
      if (in_handshake) {
        dead_reason_ = "handshake timed out";
        throw Error(ErrorCode::kHandshakeTimeout,
                    "no ack within " + std::to_string(timeout_.count()) + " ms");
      }
      fail_unavailable("no reply within " + std::to_string(timeout_.count()) + " ms");
    case LineChannel::ReadStatus::kLine:
      break;
  }
  json reply = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (reply.is_discarded() || !reply.is_object()) {
    fail_protocol("reply is not a JSON object: " + line.substr(0, 200));
  }
  return reply;
}

json Client::handshake(std::string_view token) {
  if (dead_reason_) throw Error(ErrorCode::kScorerUnavailable, *dead_reason_);
  const json hello = {{"hello", token}, {"version", kVersion}};
  if (!channel_->write_line(hello.dump())) fail_unavailable("peer not accepting input");
  json ack = read_reply(/*in_handshake=*/true);
  auto tok = ack.find("ack");
  if (tok == ack.end() || !tok->is_string() || tok->get<std::string>() != token) {
    fail_protocol("expected ack for " + std::string(token) + ", got " + ack.dump());
  }
  auto version = ack.find("version");
  if (version == ack.end() || !version->is_number_integer()) {
    fail_protocol("ack without integer version");
  }
  const int theirs = version->get<int>();
  if (theirs != kVersion) {
    dead_reason_ = "version mismatch";
    throw VersionMismatchError(kVersion, theirs);
  }
  return ack;
}

std::vector<json> Client::call(std::vector<json> requests) {
  if (dead_reason_) throw Error(ErrorCode::kScorerUnavailable, *dead_reason_);
  std::vector<std::string> ids;
  ids.reserve(requests.size());
  for (auto& request : requests) {
    ids.push_back(std::to_string(next_id_++));
    request["id"] = ids.back();
  }

  std::vector<json> replies;
  replies.reserve(requests.size());
  std::size_t sent = 0;
  while (replies.size() < requests.size()) {
    while (sent < requests.size() && sent - replies.size() < window_) {
      if (!channel_->write_line(requests[sent].dump())) {
        fail_unavailable("peer not accepting input");
      }
      ++sent;
    }
    json reply = read_reply(/*in_handshake=*/false);
    const auto& expected = ids[replies.size()];
    auto id = reply.find("id");
    if (id == reply.end() || !id->is_string() || id->get<std::string>() != expected) {
      fail_protocol("reply id mismatch: expected " + expected + ", got " +
                    (id == reply.end() ? std::string("none") : id->dump()));
    }
    replies.push_back(std::move(reply));
  }
  return replies;
}

}  // namespace segvote::protocol
