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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "segvote/corpus.hpp"

namespace segvote {

// Machine is the positive class everywhere in this module.
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  void add(Label predicted, Label gold);
  // Associative and commutative; lets shards be folded in any grouping.
  ConfusionCounts& operator+=(const ConfusionCounts& other);
  std::size_t total() const { return tp + fp + tn + fn; }

  bool operator==(const ConfusionCounts&) const = default;
};

// Ratios are nullopt when their denominator is zero.
struct MetricsReport {
  ConfusionCounts counts;
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> fpr;
  std::optional<double> fnr;
};

struct Prediction {
  Label predicted;
  Label gold;
};

std::optional<double> f1_score(double precision, double recall);

// On a class-balanced set accuracy = 1 - (fpr + fnr) / 2.
double balanced_accuracy_from_rates(double fpr, double fnr);

MetricsReport metrics_from_counts(const ConfusionCounts& counts);

// Throws kEmptyEvaluation on an empty stream.
MetricsReport compute_metrics(std::span<const Prediction> pairs);

ConfusionCounts confusion_matrix(std::span<const Prediction> pairs);

// gold\pred,human,machine / human,TN,FP / machine,FN,TP
std::string confusion_csv(const ConfusionCounts& counts);
std::string confusion_table(const ConfusionCounts& counts);

enum class SliceKey { kLanguage, kGenerator, kSource };

SliceKey parse_slice_key(std::string_view name);
std::string_view slice_key_name(SliceKey key);
// Slice value of a document; "unknown" when the field is absent.
std::string slice_value(const Document& doc, SliceKey key);

// A verdict's doc id and its predicted label.
struct PredictedDoc {
  std::string doc_id;
  Label predicted;
};

struct EvaluationReport {
  MetricsReport global;
  std::optional<SliceKey> slice_key;
  std::map<std::string, MetricsReport> slices;
};

// Joins predictions with gold documents by id. Throws kMissingGold when a
// prediction has no labeled gold document, kEmptyEvaluation when empty.
class GoldIndex {
 public:
  explicit GoldIndex(std::vector<Document> docs);

  const Document& at(const std::string& doc_id) const;

 private:
  std::map<std::string, Document> docs_;
};

EvaluationReport evaluate(std::span<const PredictedDoc> predictions,
                          const GoldIndex& gold,
                          std::optional<SliceKey> slice_key = std::nullopt);

std::map<std::string, MetricsReport> slice_report(std::span<const PredictedDoc> predictions,
                                                  const GoldIndex& gold, SliceKey key);

nlohmann::json to_json(const MetricsReport& report);
nlohmann::json to_json(const EvaluationReport& report);

// Human-readable summary, ratios rounded to three decimals.
std::string render_text(const EvaluationReport& report);

}  // namespace segvote
