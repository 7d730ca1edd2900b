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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "segvote/corpus.hpp"
#include "segvote/scoring.hpp"
#include "segvote/segmenter.hpp"

namespace segvote {

enum class Scheme { kSoft, kHard, kWeightedSoft };

std::string_view scheme_name(Scheme scheme);  // "soft" | "hard" | "wsoft"
Scheme parse_scheme(std::string_view name);

struct VotingConfig {
  Scheme scheme = Scheme::kSoft;
  double threshold = 0.95;  // strictly inside (0, 1)

  void validate() const;
};

struct Verdict {
  std::string doc_id;
  Label predicted = Label::kHuman;
  // Mean p_machine (soft), machine-voted fraction (hard) or word-weighted
  // mean (wsoft).
  double aggregate = 0.0;
  VotingConfig voting;
  std::vector<SegmentScore> segment_scores;
  std::optional<std::vector<std::size_t>> segment_weights;  // wsoft only
};

// "> threshold" below means exceeding it by more than 1e-12; anything closer
// is a tie and ties go to Human.

// Machine iff mean p_machine > threshold.
Verdict vote_soft(std::span<const SegmentScore> scores, double threshold);

// A segment votes Machine iff its p_machine > threshold; the document is
// Machine iff strictly more than half of the segments do.
Verdict vote_hard(std::span<const SegmentScore> scores, double threshold);

// Machine iff sum(w * p) / sum(w) > threshold. Weights are word counts (>= 1).
Verdict vote_weighted_soft(std::span<const SegmentScore> scores,
                           std::span<const std::size_t> weights, double threshold);

Verdict vote(std::span<const SegmentScore> scores, std::span<const std::size_t> weights,
             const VotingConfig& cfg);

// segment -> score -> vote.
Verdict detect_document(const Document& doc, const SegmenterConfig& seg_cfg,
                        Scorer& scorer, const VotingConfig& voting);

// {"doc_id","predicted","aggregate","scheme","threshold","segments":[...]}
nlohmann::json to_json(const Verdict& verdict);

}  // namespace segvote
