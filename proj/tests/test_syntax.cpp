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

#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "doctest.h"
#include "segvote/rng.hpp"
#include "segvote/syntax.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "support/temp.hpp"

using namespace segvote;
using namespace segvote::syntax;

namespace {

UposSequence random_sequence(Rng& rng, std::size_t len) {
  UposSequence s;
  s.doc_id = "r";
  for (std::size_t i = 0; i < len; ++i) s.tags.push_back(static_cast<std::uint8_t>(rng.index(kVocabSize)));
  s.original_length = len;
  return s;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIoError;
}

// Same function of the reversed input: swap directions in every layer and,
// where a layer reads the previous [fwd; bwd] output, swap its input halves.
// The attention and head vectors read that output too.
SyntaxModel mirrored(const SyntaxModel& m) {
  SyntaxModel out = m;
  const int H = m.config.hidden;
  auto swap_halves_rows = [H](Eigen::MatrixXd& v) {
    Eigen::MatrixXd top = v.topRows(H);
    v.topRows(H) = v.bottomRows(H);
    v.bottomRows(H) = top;
  };
  auto swap_halves_cols = [H](Eigen::MatrixXd& w) {
    Eigen::MatrixXd left = w.leftCols(H);
    w.leftCols(H) = w.rightCols(H);
    w.rightCols(H) = left;
  };
  for (std::size_t l = 0; l < out.params.layers.size(); ++l) {
    auto& layer = out.params.layers[l];
    std::swap(layer.fwd, layer.bwd);
    if (l > 0) {
      swap_halves_cols(layer.fwd.w);
      swap_halves_cols(layer.bwd.w);
    }
  }
  swap_halves_rows(out.params.attention);
  swap_halves_rows(out.params.head);
  return out;
}

ModelConfig small_config() { return {8, 8, 1}; }

}  // namespace

TEST_CASE("upos encoding") {
  const std::vector<std::string> names = {"DET", "NOUN", "VERB", "FOO", "PUNCT"};
  const auto s = upos_encode(names, kDefaultMaxLength, "x");
  CHECK(s.doc_id == "x");
  CHECK(s.tags == std::vector<std::uint8_t>{5, 7, 15, kUnkId, 12});
  CHECK(s.unknown == 1);
  CHECK(!s.truncated());
  CHECK(upos_decode(s) == std::vector<std::string>{"DET", "NOUN", "VERB", "UNK", "PUNCT"});
  for (std::uint8_t i = 0; i < 17; ++i) CHECK(*upos_id(upos_name(i)) == i);
  CHECK(!upos_id("noun").has_value());
  CHECK(code_of([] { upos_encode(std::vector<std::string>{}); }) == ErrorCode::kEmptySequence);
}

TEST_CASE("long sequences keep their first tags") {
  std::vector<std::string> names(600, "NOUN");
  names[0] = "DET";
  names[599] = "VERB";
  const auto s = upos_encode(names);
  CHECK(s.length() == 512);
  CHECK(s.original_length == 600);
  CHECK(s.truncated());
  CHECK(s.tags.front() == 5);
  CHECK(s.tags.back() == 7);
  CHECK(upos_encode(names, 3).tags == std::vector<std::uint8_t>{5, 7, 7});
}

TEST_CASE("zero parameters give one half") {
  const auto model = SyntaxModel::zeros({4, 3, 2});
  Rng rng(1);
  const auto pass = forward(model, random_sequence(rng, 7));
  CHECK(pass.p_machine == 0.5);
  CHECK(pass.logit == 0.0);
  for (int t = 0; t < 7; ++t) CHECK(pass.attention(t) == doctest::Approx(1.0 / 7));
  CHECK(loss(pass, Label::kMachine) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("attention is a probability vector") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto model = SyntaxModel::initialize({4, 3, 2}, 300 + static_cast<std::uint64_t>(trial));
    model.params.attention *= 20.0;
    const auto pass = forward(model, random_sequence(rng, 1 + rng.index(30)));
    CHECK(std::abs(pass.attention.sum() - 1.0) < 1e-9);
    CHECK(pass.attention.minCoeff() >= 0.0);
  }
}

TEST_CASE("a zero score vector attends uniformly") {
  auto model = SyntaxModel::initialize({6, 5, 2}, 3);
  model.params.attention.setZero();
  UposSequence s;
  s.tags.assign(4, 7);
  s.original_length = 4;
  const auto pass = forward(model, s);
  for (int t = 0; t < 4; ++t) CHECK(pass.attention(t) == doctest::Approx(0.25));
}

TEST_CASE("identical tags do not imply uniform attention") {
  // The recurrent state still evolves along a constant input.
  const auto model = SyntaxModel::initialize({6, 5, 1}, 3);
  UposSequence s;
  s.tags.assign(6, 7);
  s.original_length = 6;
  const auto pass = forward(model, s);
  CHECK(pass.attention.maxCoeff() - pass.attention.minCoeff() > 1e-6);
  UposSequence one;
  one.tags = {7};
  one.original_length = 1;
  CHECK(forward(model, one).attention(0) == 1.0);
}

TEST_CASE("forward matches a plain-loop reference") {
  Rng rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    const ModelConfig cfg{1 + static_cast<int>(rng.index(5)), 1 + static_cast<int>(rng.index(5)),
                          1 + static_cast<int>(rng.index(3))};
    const auto model = SyntaxModel::initialize(cfg, 100 + static_cast<std::uint64_t>(trial));
    const auto seq = random_sequence(rng, 1 + rng.index(12));
    std::vector<double> ref_attention;
    const double ref = testing::reference_forward(model, seq.tags, &ref_attention);
    const auto pass = forward(model, seq);
    CHECK(pass.p_machine == doctest::Approx(ref).epsilon(1e-12));
    for (std::size_t t = 0; t < seq.length(); ++t) {
      CHECK(pass.attention(static_cast<Eigen::Index>(t)) ==
            doctest::Approx(ref_attention[t]).epsilon(1e-12));
    }
  }
}

TEST_CASE("initialization") {
  const auto m = SyntaxModel::initialize({16, 32, 2}, 9);
  m.check_shapes();
  CHECK(m.params.embedding.rows() == kVocabSize);
  CHECK(m.params.layers[1].fwd.w.cols() == 64);
  const double bound0 = 1.0 / std::sqrt(16.0);
  CHECK(m.params.layers[0].fwd.w.cwiseAbs().maxCoeff() <= bound0);
  CHECK(m.params.layers[0].bwd.b.block(32, 0, 32, 1).isOnes());
  const auto again = SyntaxModel::initialize({16, 32, 2}, 9);
  CHECK(again.params.layers[1].bwd.u == m.params.layers[1].bwd.u);
  CHECK(SyntaxModel::initialize({16, 32, 2}, 10).params.head != m.params.head);
}

TEST_CASE("analytic gradients match finite differences") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto model = SyntaxModel::initialize({2, 2, 2}, seed);
    Rng rng(seed);
    const auto seq = random_sequence(rng, 3);
    for (Label gold : {Label::kHuman, Label::kMachine}) {
      const auto check = gradient_check(model, seq, gold);
      CAPTURE(seed);
      CHECK(check.passed(1e-4));
      CHECK(check.blocks.size() == 1 + 2 * 2 * 3 + 3);
    }
  }
  const auto wider = SyntaxModel::initialize({3, 4, 3}, 5);
  Rng rng(5);
  CHECK(gradient_check(wider, random_sequence(rng, 6), Label::kMachine).passed(1e-4));
}

TEST_CASE("a saturated correct prediction has a vanishing head-bias gradient") {
  auto model = SyntaxModel::initialize({3, 3, 1}, 4);
  model.params.head_bias(0, 0) = 50.0;
  Rng rng(4);
  const auto seq = random_sequence(rng, 5);
  const auto pass = forward(model, seq);
  const auto grad = backward(model, seq, Label::kMachine, pass);
  CHECK(std::abs(grad.head_bias(0, 0)) < 1e-15);
}

TEST_CASE("embedding rows of absent tags get no gradient") {
  const auto model = SyntaxModel::initialize({3, 3, 2}, 6);
  UposSequence seq;
  seq.tags = {5, 7, 15, 7};
  seq.original_length = 4;
  const auto grad = backward(model, seq, Label::kHuman, forward(model, seq));
  CHECK(grad.embedding.row(kUnkId).isZero(0.0));
  CHECK(grad.embedding.row(0).isZero(0.0));
  CHECK(!grad.embedding.row(7).isZero(0.0));
}

TEST_CASE("reversal symmetry") {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const ModelConfig cfg{2 + static_cast<int>(rng.index(3)), 1 + static_cast<int>(rng.index(4)),
                          1 + static_cast<int>(rng.index(3))};
    const auto model = SyntaxModel::initialize(cfg, 200 + static_cast<std::uint64_t>(trial));
    auto seq = random_sequence(rng, 1 + rng.index(10));
    auto reversed = seq;
    std::reverse(reversed.tags.begin(), reversed.tags.end());
    CHECK(forward(mirrored(model), reversed).p_machine ==
          doctest::Approx(forward(model, seq).p_machine).epsilon(1e-12));
  }
}

TEST_CASE("checkpoint round trip is bit-identical") {
  testing::TempDir dir;
  const auto model = SyntaxModel::initialize({4, 3, 2}, 8);
  save_model(model, dir.file("s.json"));
  const auto back = load_model(dir.file("s.json"));
  CHECK(back.config == model.config);
  CHECK(back.seed == model.seed);
  bool same = true;
  std::vector<Eigen::MatrixXd> blocks;
  model.params.visit([&](const std::string&, const Eigen::MatrixXd& m) { blocks.push_back(m); });
  std::size_t k = 0;
  back.params.visit([&](const std::string&, const Eigen::MatrixXd& m) { same &= m == blocks[k++]; });
  CHECK(same);
  Rng rng(8);
  const auto seq = random_sequence(rng, 9);
  CHECK(forward(back, seq).p_machine == forward(model, seq).p_machine);

  auto j = to_json(model);
  j["blocks"][0]["shape"] = {1, 1};
  CHECK(code_of([&] { model_from_json(j); }) != ErrorCode::kIoError);
  CHECK(code_of([&] { load_model(dir.write("bad.json", "{}")); }) == ErrorCode::kBadCheckpoint);
}

TEST_CASE("zero learning rate leaves the model unchanged") {
  const auto data = testing::grammar_dataset(20, 1);
  const auto init = SyntaxModel::initialize(small_config(), 1);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.learning_rate = 0.0;
  const auto result = train(init, data, {}, cfg);
  CHECK(result.model.params.head == init.params.head);
  CHECK(result.model.params.layers[0].fwd.u == init.params.layers[0].fwd.u);
  REQUIRE(result.history.size() == 2);
  CHECK(result.history[0].train_loss == doctest::Approx(result.history[1].train_loss).epsilon(1e-12));
}

TEST_CASE("training is deterministic") {
  const auto data = testing::grammar_dataset(20, 2);
  TrainConfig cfg;
  cfg.epochs = 2;
  const auto a = train(SyntaxModel::initialize(small_config(), 3), data, data, cfg);
  const auto b = train(SyntaxModel::initialize(small_config(), 3), data, data, cfg);
  CHECK(a.model.params.head == b.model.params.head);
  CHECK(a.model.params.embedding == b.model.params.embedding);
  CHECK(a.history.back().train_loss == b.history.back().train_loss);
}

TEST_CASE("separable grammars are learned") {
  const auto train_data = testing::grammar_dataset(100, 10);
  const auto val = testing::grammar_dataset(100, 11);
  TrainConfig cfg;
  cfg.epochs = 20;
  const auto result = train(SyntaxModel::initialize(small_config(), 1), train_data, val, cfg);
  const auto stats = evaluate(result.model, val);
  MESSAGE("grammar validation accuracy " << stats.accuracy << " after "
                                         << result.history.size() << " epochs");
  CHECK(stats.accuracy >= 0.9);
}

TEST_CASE("shuffled labels stay near chance") {
  auto train_data = testing::grammar_dataset(100, 12);
  auto val = testing::grammar_dataset(200, 13);
  Rng rng(99);
  for (auto* set : {&train_data, &val}) {
    std::vector<Label> labels;
    for (const auto& ex : *set) labels.push_back(ex.label);
    rng.shuffle(std::span<Label>(labels));
    for (std::size_t i = 0; i < set->size(); ++i) (*set)[i].label = labels[i];
  }
  TrainConfig cfg;
  cfg.epochs = 10;
  const auto result = train(SyntaxModel::initialize(small_config(), 1), train_data, val, cfg);
  const double acc = evaluate(result.model, val).accuracy;
  MESSAGE("shuffled-label validation accuracy " << acc);
  CHECK(acc >= 0.4);
  CHECK(acc <= 0.6);
}

TEST_CASE("tagged rows") {
  testing::TempDir dir;
  const auto path = dir.write("t.jsonl",
                              "{\"id\":\"a\",\"tags\":[\"DET\",\"NOUN\"],\"label\":0}\n"
                              "{\"id\":\"b\",\"label\":1}\n"
                              "{\"id\":\"c\",\"tags\":[\"VERB\",\"ZZZ\"]}\n");
  const auto corpus = load_tagged(path);
  REQUIRE(corpus.docs.size() == 2);
  CHECK(corpus.docs[0].label == Label::kHuman);
  CHECK(corpus.docs[1].sequence.unknown == 1);
  CHECK(!corpus.docs[1].label.has_value());
  REQUIRE(corpus.skipped.size() == 1);
  CHECK(corpus.skipped[0].line == 2);
  CHECK(corpus.skipped[0].code == ErrorCode::kMissingTags);
  CHECK(code_of([&] { load_tagged(path, true); }) == ErrorCode::kMissingTags);
}
