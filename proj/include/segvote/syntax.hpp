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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "segvote/corpus.hpp"
#include "segvote/protocol.hpp"

namespace segvote::syntax {

// Frozen id order; checkpoints depend on it.
inline constexpr std::array<std::string_view, 17> kUposTags = {
    "ADJ",  "ADP",  "ADV",   "AUX",   "CCONJ", "DET",   "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM",   "VERB", "X"};
inline constexpr std::uint8_t kUnkId = 17;
inline constexpr int kVocabSize = 18;
inline constexpr std::size_t kDefaultMaxLength = 512;

struct UposSequence {
  std::string doc_id;
  std::vector<std::uint8_t> tags;
  std::size_t unknown = 0;          // names mapped to UNK
  std::size_t original_length = 0;  // before truncation
  bool truncated() const { return original_length > tags.size(); }

  std::size_t length() const { return tags.size(); }
};

std::optional<std::uint8_t> upos_id(std::string_view name);
std::string_view upos_name(std::uint8_t id);  // "UNK" for the reserved id

// Keeps the first `max_length` tags. Throws kEmptySequence on empty input.
UposSequence upos_encode(std::span<const std::string> names,
                         std::size_t max_length = kDefaultMaxLength,
                         std::string doc_id = {});
std::vector<std::string> upos_decode(const UposSequence& seq);

// --- Model ------------------------------------------------------------------

struct ModelConfig {
  int embedding_dim = 16;
  int hidden = 32;  // per direction
  int layers = 2;

  bool operator==(const ModelConfig&) const = default;
};

// Gate rows are stacked [input; forget; cell; output], each `hidden` tall.
struct LstmDirection {
  Eigen::MatrixXd w;  // 4H x input
  Eigen::MatrixXd u;  // 4H x H
  Eigen::MatrixXd b;  // 4H x 1
};

struct LstmLayer {
  LstmDirection fwd;
  LstmDirection bwd;
};

// Every trainable block. Also used to hold gradients.
struct Parameters {
  Eigen::MatrixXd embedding;  // vocab x d
  std::vector<LstmLayer> layers;
  Eigen::MatrixXd attention;  // 2H x 1, dot-product score vector
  Eigen::MatrixXd head;       // 2H x 1
  Eigen::MatrixXd head_bias;  // 1 x 1

  static Parameters zeros(const ModelConfig& cfg);

  // Visits blocks in a fixed order with stable names, e.g. "layer1.bwd.u".
  void visit(const std::function<void(const std::string&, Eigen::MatrixXd&)>& f);
  void visit(const std::function<void(const std::string&, const Eigen::MatrixXd&)>& f) const;

  double squared_norm() const;
  bool all_finite() const;
};

struct SyntaxModel {
  static constexpr int kVersion = 1;

  ModelConfig config;
  Parameters params;
  std::uint64_t seed = 0;

  // Uniform in +-1/sqrt(fan_in), forget-gate biases set to 1.
  static SyntaxModel initialize(const ModelConfig& cfg, std::uint64_t seed);
  static SyntaxModel zeros(const ModelConfig& cfg);

  // Throws kShapeMismatch when a block disagrees with the config.
  void check_shapes() const;
};

struct DirectionCache {
  // Columns are timesteps in natural order, whatever the direction.
  Eigen::MatrixXd i, f, g, o, c, h;
};

struct LayerCache {
  Eigen::MatrixXd input;   // in x T
  Eigen::MatrixXd output;  // 2H x T, [fwd; bwd]
  DirectionCache fwd;
  DirectionCache bwd;
};

struct ForwardPass {
  double p_machine = 0.5;
  double logit = 0.0;
  Eigen::VectorXd attention;  // T weights summing to 1
  Eigen::VectorXd context;    // 2H
  std::vector<LayerCache> layers;
};

ForwardPass forward(const SyntaxModel& model, const UposSequence& seq);

// Binary cross-entropy of the pass against `gold`.
double loss(const ForwardPass& pass, Label gold);

// Gradients of the binary cross-entropy for one sequence. `pass` must come
// from forward() on the same model and sequence.
Parameters backward(const SyntaxModel& model, const UposSequence& seq, Label gold,
                    const ForwardPass& pass);

// --- Gradient check ---------------------------------------------------------

struct BlockCheck {
  std::string name;
  std::size_t size = 0;
  double max_relative_error = 0.0;
};

struct GradientCheck {
  std::vector<BlockCheck> blocks;
  double max_relative_error = 0.0;
  bool passed(double tolerance) const { return max_relative_error < tolerance; }
};

// Central differences on every parameter against backward(); error per entry
// is |a - n| / (|a| + |n| + 1e-12).
GradientCheck gradient_check(const SyntaxModel& model, const UposSequence& seq, Label gold,
                             double epsilon = 1e-4);

// --- Training ---------------------------------------------------------------

struct LabeledSequence {
  UposSequence sequence;
  Label label;
};

struct TrainConfig {
  int epochs = 20;
  double learning_rate = 0.5;
  std::size_t batch_size = 16;
  double clip_norm = 5.0;  // global L2 norm of the batch gradient
  std::uint64_t seed = 1;
  // Stop after the first epoch whose validation accuracy reaches this.
  std::optional<double> target_accuracy;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> validation_loss;
  std::optional<double> validation_accuracy;
};

struct TrainResult {
  SyntaxModel model;
  std::vector<EpochStats> history;
};

struct EvalStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Mean loss and accuracy at threshold 0.5.
EvalStats evaluate(const SyntaxModel& model, std::span<const LabeledSequence> data);

// Mini-batch SGD with global-norm clipping, deterministic for a fixed seed
// and data order. `validation` may be empty.
TrainResult train(SyntaxModel init, std::span<const LabeledSequence> train_data,
                  std::span<const LabeledSequence> validation, const TrainConfig& cfg,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

// --- Checkpoints ------------------------------------------------------------

nlohmann::json to_json(const SyntaxModel& model);
SyntaxModel model_from_json(const nlohmann::json& j);
void save_model(const SyntaxModel& model, const std::filesystem::path& path);
SyntaxModel load_model(const std::filesystem::path& path);

// --- Tag sources ------------------------------------------------------------

struct TaggedDoc {
  UposSequence sequence;
  std::optional<Label> label;
};

struct TaggedCorpus {
  std::vector<TaggedDoc> docs;
  std::vector<SkipReport> skipped;
};

// Rows {"id","tags":[...],"label"?}. Rows without tags raise kMissingTags in
// strict mode and are skipped otherwise.
TaggedCorpus load_tagged(const std::filesystem::path& path, bool strict = false,
                         std::size_t max_length = kDefaultMaxLength);

// Client for an external UPOS tagger. Same line-JSON framing as the scorer
// protocol with token "segvote-tagger"; replies carry {"id","tags":[...]}.
class ExternalTagger {
 public:
  ExternalTagger(std::unique_ptr<protocol::LineChannel> channel, protocol::Timeout timeout);

  // Documents whose request gets an error reply are skipped and reported.
  // Malformed or misordered replies throw kScorerProtocolError.
  TaggedCorpus tag(std::span<const Document> docs,
                   std::size_t max_length = kDefaultMaxLength);

 private:
  protocol::Client client_;
};

std::unique_ptr<ExternalTagger> connect_external_tagger(std::string_view selector,
                                                        protocol::Timeout timeout);

}  // namespace segvote::syntax
