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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "segvote/corpus.hpp"
#include "segvote/protocol.hpp"
#include "segvote/segmenter.hpp"

namespace segvote {

struct SegmentScore {
  std::string doc_id;
  std::size_t index = 0;
  double p_machine = 0.5;
  double logit = 0.0;
  std::string scorer_id;
};

inline constexpr double kProbabilityFloor = 1e-6;

double sigmoid(double z);
double clamp_probability(double p);
// ln(p / (1 - p)) after clamping p to [1e-6, 1 - 1e-6].
double logit_of(double p);

// Builds a score from a probability, clamping it so that p_machine and logit
// are mutually consistent.
SegmentScore score_from_probability(const Segment& seg, double p,
                                    std::string_view scorer_id);
SegmentScore score_from_logit(const Segment& seg, double logit,
                              std::string_view scorer_id);

// Per-segment probabilistic scorer. Implementations must be deterministic for
// a fixed state.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual std::string id() const = 0;
  virtual std::vector<SegmentScore> score_batch(std::span<const Segment> segments) = 0;

  SegmentScore score(const Segment& seg) {
    return score_batch(std::span<const Segment>(&seg, 1)).front();
  }
};

// --- Character n-gram features -------------------------------------------

struct NgramFeatureConfig {
  int n_low = 2;
  int n_high = 4;
  std::uint32_t dim = 1u << 18;  // power of two

  void validate() const;
};

struct Feature {
  std::uint32_t index;
  double count;

  bool operator==(const Feature&) const = default;
};

std::uint64_t fnv1a64(std::string_view bytes);

// Hashed counts of lowercased character n-grams, sorted by bucket with
// duplicates merged.
std::vector<Feature> featurize(std::string_view text, const NgramFeatureConfig& cfg);

// --- Built-in logistic scorer ----------------------------------------------

struct NgramTrainingMeta {
  std::uint64_t seed = 0;
  int epochs = 0;
  double learning_rate = 0.0;
  std::size_t batch_size = 0;
  std::size_t examples = 0;
  std::vector<double> loss_trace;  // [initial, after epoch 1, ...]
};

struct NgramScorerModel {
  NgramFeatureConfig features;
  std::vector<double> weights;
  double bias = 0.0;
  NgramTrainingMeta meta;

  static NgramScorerModel zeros(const NgramFeatureConfig& cfg);

  double logit(std::span<const Feature> x) const;
  double logit(std::string_view text) const;
  void validate() const;
};

void save_ngram_model(const NgramScorerModel& model, const std::filesystem::path& path);
NgramScorerModel load_ngram_model(const std::filesystem::path& path);
nlohmann::json to_json(const NgramScorerModel& model);
NgramScorerModel ngram_model_from_json(const nlohmann::json& j);

struct LabeledSegment {
  Segment segment;
  Label label;
};

struct NgramTrainConfig {
  NgramFeatureConfig features;
  int epochs = 8;
  double learning_rate = 0.02;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;
};

using EpochCallback = std::function<void(int epoch, double loss)>;

// Mini-batch gradient descent on mean binary cross-entropy. Examples are
// visited in a seeded shuffled order each epoch.
NgramScorerModel train_ngram_scorer(std::span<const LabeledSegment> train,
                                    const NgramTrainConfig& cfg,
                                    const EpochCallback& on_epoch = {});

class NgramScorer final : public Scorer {
 public:
  explicit NgramScorer(std::shared_ptr<const NgramScorerModel> model,
                       std::string scorer_id = "builtin-ngram");

  std::string id() const override { return scorer_id_; }
  std::vector<SegmentScore> score_batch(std::span<const Segment> segments) override;

 private:
  std::shared_ptr<const NgramScorerModel> model_;
  std::string scorer_id_;
};

// --- External scorer over the line-JSON protocol ---------------------------

class ExternalScorer final : public Scorer {
 public:
  // Performs the handshake; throws kHandshakeTimeout, kVersionMismatch,
  // kScorerUnavailable or kScorerProtocolError.
  ExternalScorer(std::unique_ptr<protocol::LineChannel> channel,
                 protocol::Timeout timeout);

  std::string id() const override { return scorer_id_; }
  // Pipelined; one batch in flight at a time per handle.
  std::vector<SegmentScore> score_batch(std::span<const Segment> segments) override;

 private:
  std::mutex mu_;
  protocol::Client client_;
  std::string scorer_id_;
};

std::unique_ptr<ExternalScorer> connect_external_scorer(std::string_view selector,
                                                        protocol::Timeout timeout);

}  // namespace segvote
