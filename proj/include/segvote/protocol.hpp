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

#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace segvote::protocol {

inline constexpr int kVersion = 1;
inline constexpr std::string_view kScorerToken = "segvote-scorer";
inline constexpr std::string_view kTaggerToken = "segvote-tagger";

using Timeout = std::chrono::milliseconds;

// A bidirectional newline-delimited byte stream.
class LineChannel {
 public:
  enum class ReadStatus { kLine, kEof, kTimeout };

  virtual ~LineChannel() = default;

  // Writes `line` plus '\n'. Returns false when the peer is gone.
  virtual bool write_line(std::string_view line) = 0;
  virtual ReadStatus read_line(std::string& line, Timeout timeout) = 0;
};

// Runs `command` under /bin/sh with its stdin/stdout connected to us. The
// child's stderr is inherited. Closing the channel closes the child's stdin
// and reaps it (SIGKILL after a grace period).
std::unique_ptr<LineChannel> spawn_process(const std::string& command);

std::unique_ptr<LineChannel> connect_tcp(const std::string& host, int port,
                                         Timeout timeout);

// Wraps already-open descriptors; takes ownership. Used by tests and by
// spawn_process/connect_tcp internally.
std::unique_ptr<LineChannel> adopt_fds(int read_fd, int write_fd);

// Line-JSON request/reply client shared by the scorer and tagger protocols.
// Requests are pipelined up to `window` in flight; replies must come back in
// request order with matching ids. Not thread-safe: callers serialize.
class Client {
 public:
  Client(std::unique_ptr<LineChannel> channel, Timeout timeout,
         std::size_t window = 64);

  // Sends {"hello":token,"version":1}; returns the ack object.
  nlohmann::json handshake(std::string_view token);

  // Assigns ids, sends every request and returns the replies in order. Error
  // replies ({"id","error"}) are returned as-is for the caller to interpret.
  std::vector<nlohmann::json> call(std::vector<nlohmann::json> requests);

  bool alive() const { return !dead_reason_; }

 private:
  nlohmann::json read_reply(bool in_handshake);
  [[noreturn]] void fail_unavailable(const std::string& why);
  [[noreturn]] void fail_protocol(const std::string& why);

  std::unique_ptr<LineChannel> channel_;
  Timeout timeout_;
  std::size_t window_;
  std::uint64_t next_id_ = 0;
  std::optional<std::string> dead_reason_;
};

struct Endpoint {
  enum class Kind { kExec, kTcp };
  Kind kind;
  std::string command;  // kExec
  std::string host;     // kTcp
  int port = 0;
};

// Parses "exec:CMD" or "tcp:HOST:PORT".
Endpoint parse_endpoint(std::string_view selector);

std::unique_ptr<LineChannel> open_endpoint(const Endpoint& endpoint,
                                           Timeout timeout);

}  // namespace segvote::protocol
