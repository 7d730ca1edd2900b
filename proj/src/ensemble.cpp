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

#include "segvote/ensemble.hpp"

#include <cmath>

#include "segvote/error.hpp"

namespace segvote {
namespace {

void require_scores(std::span<const SegmentScore> scores) {
  if (scores.empty()) throw Error(ErrorCode::kEmptyScores, "no segment scores to vote on");
}

void require_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "threshold must lie strictly between 0 and 1");
  }
}

// Values this close to the threshold count as equal to it, so that decimal
// inputs such as mean(0.9, 1.0) at 0.95 resolve as a tie (Human) despite
// binary rounding.
constexpr double kTieBand = 1e-12;

bool above(double value, double threshold) { return value - threshold > kTieBand; }

Verdict make_verdict(std::span<const SegmentScore> scores, Scheme scheme,
                     double threshold, double aggregate, bool machine) {
  Verdict v;
  v.doc_id = scores.front().doc_id;
  v.predicted = machine ? Label::kMachine : Label::kHuman;
  v.aggregate = aggregate;
  v.voting = {scheme, threshold};
  v.segment_scores.assign(scores.begin(), scores.end());
  return v;
}

}  // namespace

std::string_view scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::kSoft: return "soft";
    case Scheme::kHard: return "hard";
    case Scheme::kWeightedSoft: return "wsoft";
  }
  return "soft";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "soft") return Scheme::kSoft;
  if (name == "hard") return Scheme::kHard;
  if (name == "wsoft") return Scheme::kWeightedSoft;
  throw Error(ErrorCode::kInvalidArgument,
              "scheme must be soft, hard or wsoft, got " + std::string(name));
}

void VotingConfig::validate() const { require_threshold(threshold); }

Verdict vote_soft(std::span<const SegmentScore> scores, double threshold) {
  require_scores(scores);
  require_threshold(threshold);
  double sum = 0.0;
  for (const auto& s : scores) sum += s.p_machine;
  const double mean = sum / static_cast<double>(scores.size());
  return make_verdict(scores, Scheme::kSoft, threshold, mean, above(mean, threshold));
}

Verdict vote_hard(std::span<const SegmentScore> scores, double threshold) {
  require_scores(scores);
  require_threshold(threshold);
  std::size_t machine_votes = 0;
  for (const auto& s : scores) {
    if (above(s.p_machine, threshold)) ++machine_votes;
  }
  const double fraction =
      static_cast<double>(machine_votes) / static_cast<double>(scores.size());
  // Integer form of "fraction > 1/2".
  return make_verdict(scores, Scheme::kHard, threshold, fraction,
                      2 * machine_votes > scores.size());
}

Verdict vote_weighted_soft(std::span<const SegmentScore> scores,
                           std::span<const std::size_t> weights, double threshold) {
  require_scores(scores);
  require_threshold(threshold);
  if (weights.size() != scores.size()) {
    throw Error(ErrorCode::kWeightMismatch,
                std::to_string(weights.size()) + " weights for " +
                    std::to_string(scores.size()) + " scores");
  }
  double weighted = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (weights[i] < 1) {
      throw Error(ErrorCode::kWeightMismatch, "segment weights must be >= 1");
    }
    const auto w = static_cast<double>(weights[i]);
    weighted += w * scores[i].p_machine;
    total += w;
  }
  const double mean = weighted / total;
  Verdict v =
      make_verdict(scores, Scheme::kWeightedSoft, threshold, mean, above(mean, threshold));
  v.segment_weights.emplace(weights.begin(), weights.end());
  return v;
}

Verdict vote(std::span<const SegmentScore> scores, std::span<const std::size_t> weights,
             const VotingConfig& cfg) {
  switch (cfg.scheme) {
    case Scheme::kSoft: return vote_soft(scores, cfg.threshold);
    case Scheme::kHard: return vote_hard(scores, cfg.threshold);
    case Scheme::kWeightedSoft: return vote_weighted_soft(scores, weights, cfg.threshold);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown scheme");
}

Verdict detect_document(const Document& doc, const SegmenterConfig& seg_cfg,
                        Scorer& scorer, const VotingConfig& voting) {
  const auto segments = segment_text(doc, seg_cfg);
  const auto scores = scorer.score_batch(segments);
  std::vector<std::size_t> weights;
  weights.reserve(segments.size());
  for (const auto& seg : segments) weights.push_back(seg.word_count);
  Verdict v = vote(scores, weights, voting);
  v.doc_id = doc.id;
  return v;
}

nlohmann::json to_json(const Verdict& verdict) {
  nlohmann::json segments = nlohmann::json::array();
  for (std::size_t i = 0; i < verdict.segment_scores.size(); ++i) {
    const auto& s = verdict.segment_scores[i];
    nlohmann::json seg = {{"index", s.index}, {"p_machine", s.p_machine}};
    seg["weight"] = verdict.segment_weights
                        ? nlohmann::json((*verdict.segment_weights)[i])
                        : nlohmann::json(nullptr);
    segments.push_back(std::move(seg));
  }
  return {{"doc_id", verdict.doc_id},
          {"predicted", label_value(verdict.predicted)},
          {"aggregate", verdict.aggregate},
          {"scheme", scheme_name(verdict.voting.scheme)},
          {"threshold", verdict.voting.threshold},
          {"segments", std::move(segments)}};
}

}  // namespace segvote
