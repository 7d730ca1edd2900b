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

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <string>
#include <thread>

#include "doctest.h"
#include "segvote/protocol.hpp"
#include "segvote/scoring.hpp"
#include "segvote/syntax.hpp"

using namespace segvote;
using namespace std::chrono_literals;

namespace {

std::string peer(const std::string& args) {
  return std::string("exec:") + SEGVOTE_FAKE_PEER + " " + args;
}

std::vector<Segment> segments(const std::vector<std::string>& texts) {
  std::vector<Segment> out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    Segment s;
    s.doc_id = "d";
    s.index = i;
    s.text = texts[i];
    out.push_back(s);
  }
  return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::kIoError;
}

// One-connection scorer server on an ephemeral loopback port.
class LoopbackServer {
 public:
  LoopbackServer() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    REQUIRE(::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
    REQUIRE(::listen(listen_fd_, 1) == 0);
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    thread_ = std::thread([this] { serve(); });
  }
  ~LoopbackServer() {
    thread_.join();
    ::close(listen_fd_);
  }
  int port() const { return port_; }

 private:
  void serve() {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) return;
    auto channel = protocol::adopt_fds(fd, ::dup(fd));
    std::string line;
    bool greeted = false;
    while (channel->read_line(line, 5000ms) == protocol::LineChannel::ReadStatus::kLine) {
      const auto req = nlohmann::json::parse(line);
      if (!greeted) {
        channel->write_line(
            nlohmann::json{{"ack", "segvote-scorer"}, {"version", 1}, {"scorer_id", "tcp-const"}}
                .dump());
        greeted = true;
        continue;
      }
      channel->write_line(nlohmann::json{{"id", req["id"]}, {"p_machine", 0.25}}.dump());
    }
  }

  int listen_fd_ = -1;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("endpoint selectors") {
  auto e = protocol::parse_endpoint("exec:python3 -m bridge --x");
  CHECK(e.kind == protocol::Endpoint::Kind::kExec);
  CHECK(e.command == "python3 -m bridge --x");
  e = protocol::parse_endpoint("tcp:127.0.0.1:9000");
  CHECK(e.kind == protocol::Endpoint::Kind::kTcp);
  CHECK(e.host == "127.0.0.1");
  CHECK(e.port == 9000);
  for (const char* bad : {"", "exec:", "tcp:host", "tcp:host:abc", "tcp:host:70000", "http://x"}) {
    CHECK_THROWS_AS(protocol::parse_endpoint(bad), Error);
  }
}

TEST_CASE("handshake and scoring against a healthy peer") {
  auto scorer = connect_external_scorer(peer("--scorer-id peer-a --p 0.97"), 5000ms);
  CHECK(scorer->id() == "peer-a");
  const auto segs = segments({"one.", "two.", "three."});
  const auto scores = scorer->score_batch(segs);
  REQUIRE(scores.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(scores[i].index == i);
    CHECK(scores[i].p_machine == 0.97);
    CHECK(scores[i].logit == doctest::Approx(std::log(0.97 / 0.03)));
    CHECK(scores[i].scorer_id == "peer-a");
  }
  CHECK(scorer->score_batch({}).empty());
}

TEST_CASE("replies keep request order under pipelining") {
  auto scorer = connect_external_scorer(peer("--marker zq --burst"), 5000ms);
  std::vector<std::string> texts;
  for (int i = 0; i < 100; ++i) texts.push_back(i % 3 == 0 ? "zq here." : "plain.");
  const auto scores = scorer->score_batch(segments(texts));
  REQUIRE(scores.size() == 100);
  for (int i = 0; i < 100; ++i) CHECK(scores[i].p_machine == (i % 3 == 0 ? 0.99 : 0.01));
}

TEST_CASE("handshake failures") {
  CHECK(code_of([] { connect_external_scorer(peer("--version 2"), 5000ms); }) ==
        ErrorCode::kVersionMismatch);
  try {
    connect_external_scorer(peer("--version 2"), 5000ms);
  } catch (const VersionMismatchError& e) {
    CHECK(e.ours() == 1);
    CHECK(e.theirs() == 2);
  }
  CHECK(code_of([] { connect_external_scorer(peer("--mode silent"), 300ms); }) ==
        ErrorCode::kHandshakeTimeout);
  CHECK(code_of([] { connect_external_scorer(peer("--mode garbage-ack"), 5000ms); }) ==
        ErrorCode::kScorerProtocolError);
  CHECK(code_of([] { connect_external_scorer(peer("--token someone-else"), 5000ms); }) ==
        ErrorCode::kScorerProtocolError);
  CHECK(code_of([] { connect_external_scorer("exec:exit 0", 5000ms); }) ==
        ErrorCode::kScorerUnavailable);
}

TEST_CASE("peer death mid-batch poisons the handle") {
  auto scorer = connect_external_scorer(peer("--mode die-after --limit 2"), 5000ms);
  const auto segs = segments({"a.", "b.", "c.", "d."});
  CHECK(code_of([&] { scorer->score_batch(segs); }) == ErrorCode::kScorerUnavailable);
  CHECK(code_of([&] { scorer->score_batch(segs); }) == ErrorCode::kScorerUnavailable);
}

TEST_CASE("hung peer times out as unavailable") {
  auto scorer = connect_external_scorer(peer("--mode hang-after --limit 1"), 300ms);
  CHECK(code_of([&] { scorer->score_batch(segments({"a.", "b."})); }) ==
        ErrorCode::kScorerUnavailable);
}

TEST_CASE("malformed replies are protocol errors") {
  for (const char* mode : {"garbage", "wrong-id", "swap"}) {
    CAPTURE(mode);
    auto scorer = connect_external_scorer(peer(std::string("--mode ") + mode), 5000ms);
    CHECK(code_of([&] { scorer->score_batch(segments({"a.", "b.", "c."})); }) ==
          ErrorCode::kScorerProtocolError);
    CHECK(code_of([&] { scorer->score_batch(segments({"a."})); }) ==
          ErrorCode::kScorerUnavailable);
  }
}

TEST_CASE("out-of-range probabilities are protocol errors") {
  auto scorer = connect_external_scorer(peer("--p 1.5"), 5000ms);
  CHECK(code_of([&] { scorer->score_batch(segments({"a."})); }) ==
        ErrorCode::kScorerProtocolError);
}

TEST_CASE("error replies surface as protocol errors") {
  auto scorer = connect_external_scorer(peer("--fail-on bad"), 5000ms);
  CHECK(code_of([&] { scorer->score_batch(segments({"ok.", "bad.", "ok."})); }) ==
        ErrorCode::kScorerProtocolError);
}

TEST_CASE("tcp transport") {
  LoopbackServer server;
  auto scorer =
      connect_external_scorer("tcp:127.0.0.1:" + std::to_string(server.port()), 5000ms);
  CHECK(scorer->id() == "tcp-const");
  const auto scores = scorer->score_batch(segments({"x.", "y."}));
  REQUIRE(scores.size() == 2);
  CHECK(scores[1].p_machine == 0.25);
  scorer.reset();
}

TEST_CASE("tcp connection refused") {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  const int port = ntohs(addr.sin_port);
  ::close(fd);
  CHECK(code_of([&] {
          connect_external_scorer("tcp:127.0.0.1:" + std::to_string(port), 1000ms);
        }) == ErrorCode::kScorerUnavailable);
}

TEST_CASE("tagger adapter skips refused documents") {
  auto tagger = syntax::connect_external_tagger(peer("--mode tagger --fail-on broken"), 5000ms);
  std::vector<Document> docs(3);
  docs[0].id = "a";
  docs[0].text = "the cat sat.";
  docs[0].label = Label::kHuman;
  docs[1].id = "b";
  docs[1].text = "broken input.";
  docs[2].id = "c";
  docs[2].text = "run now!";
  docs[2].label = Label::kMachine;
  const auto corpus = tagger->tag(docs);
  REQUIRE(corpus.docs.size() == 2);
  CHECK(corpus.docs[0].sequence.doc_id == "a");
  CHECK(corpus.docs[0].sequence.tags ==
        std::vector<std::uint8_t>{*syntax::upos_id("NOUN"), *syntax::upos_id("NOUN"),
                                  *syntax::upos_id("PUNCT")});
  CHECK(corpus.docs[0].label == Label::kHuman);
  CHECK(corpus.docs[1].sequence.doc_id == "c");
  REQUIRE(corpus.skipped.size() == 1);
  CHECK(corpus.skipped[0].reason.find("broken") != std::string::npos);
}

TEST_CASE("tagger rejects a scorer peer") {
  CHECK(code_of([] { syntax::connect_external_tagger(peer(""), 5000ms); }) ==
        ErrorCode::kScorerProtocolError);
}
