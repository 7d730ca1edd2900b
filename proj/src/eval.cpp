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

#include "segvote/eval.hpp"

#include <cstdio>
#include <sstream>

#include "segvote/error.hpp"

namespace segvote {
namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::string fixed3(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", *v);
  return buf;
}

}  // namespace

void ConfusionCounts::add(Label predicted, Label gold) {
  const bool pred_machine = predicted == Label::kMachine;
  const bool gold_machine = gold == Label::kMachine;
  if (pred_machine && gold_machine) {
    ++tp;
  } else if (pred_machine) {
    ++fp;
  } else if (gold_machine) {
    ++fn;
  } else {
    ++tn;
  }
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& other) {
  tp += other.tp;
  fp += other.fp;
  tn += other.tn;
  fn += other.fn;
  return *this;
}

std::optional<double> f1_score(double precision, double recall) {
  if (precision + recall <= 0.0) return std::nullopt;
  return 2.0 * precision * recall / (precision + recall);
}

double balanced_accuracy_from_rates(double fpr, double fnr) {
  return 1.0 - (fpr + fnr) / 2.0;
}

MetricsReport metrics_from_counts(const ConfusionCounts& c) {
  MetricsReport r;
  r.counts = c;
  r.accuracy = ratio(c.tp + c.tn, c.total());
  r.precision = ratio(c.tp, c.tp + c.fp);
  r.recall = ratio(c.tp, c.tp + c.fn);
  if (r.precision && r.recall) r.f1 = f1_score(*r.precision, *r.recall);
  r.fpr = ratio(c.fp, c.fp + c.tn);
  r.fnr = ratio(c.fn, c.fn + c.tp);
  return r;
}

ConfusionCounts confusion_matrix(std::span<const Prediction> pairs) {
  ConfusionCounts c;
  for (const auto& p : pairs) c.add(p.predicted, p.gold);
  return c;
}

MetricsReport compute_metrics(std::span<const Prediction> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyEvaluation, "no predictions");
  return metrics_from_counts(confusion_matrix(pairs));
}

std::string confusion_csv(const ConfusionCounts& c) {
  std::ostringstream out;
  out << "gold\\pred,human,machine\n"
      << "human," << c.tn << ',' << c.fp << '\n'
      << "machine," << c.fn << ',' << c.tp << '\n';
  return out.str();
}

std::string confusion_table(const ConfusionCounts& c) {
  const std::string cells[3][3] = {
      {"gold\\pred", "human", "machine"},
      {"human", std::to_string(c.tn), std::to_string(c.fp)},
      {"machine", std::to_string(c.fn), std::to_string(c.tp)}};
  std::size_t width[3] = {0, 0, 0};
  for (const auto& row : cells) {
    for (int col = 0; col < 3; ++col) width[col] = std::max(width[col], row[col].size());
  }
  std::ostringstream out;
  for (const auto& row : cells) {
    for (int col = 0; col < 3; ++col) {
      const auto pad = width[col] - row[col].size();
      if (col == 0) {
        out << row[col] << std::string(pad, ' ');
      } else {
        out << "  " << std::string(pad, ' ') << row[col];
      }
    }
    out << '\n';
  }
  return out.str();
}

SliceKey parse_slice_key(std::string_view name) {
  if (name == "language") return SliceKey::kLanguage;
  if (name == "generator") return SliceKey::kGenerator;
  if (name == "source") return SliceKey::kSource;
  throw Error(ErrorCode::kInvalidArgument,
              "slice key must be language, generator or source, got " + std::string(name));
}

std::string_view slice_key_name(SliceKey key) {
  switch (key) {
    case SliceKey::kLanguage: return "language";
    case SliceKey::kGenerator: return "generator";
    case SliceKey::kSource: return "source";
  }
  return "language";
}

std::string slice_value(const Document& doc, SliceKey key) {
  switch (key) {
    case SliceKey::kLanguage:
      return doc.language.empty() ? "unknown" : doc.language;
    case SliceKey::kGenerator: return doc.generator.value_or("unknown");
    case SliceKey::kSource: return doc.source.value_or("unknown");
  }
  return "unknown";
}

GoldIndex::GoldIndex(std::vector<Document> docs) {
  for (auto& doc : docs) {
    auto id = doc.id;
    docs_.insert_or_assign(std::move(id), std::move(doc));
  }
}

const Document& GoldIndex::at(const std::string& doc_id) const {
  auto it = docs_.find(doc_id);
  if (it == docs_.end()) {
    throw Error(ErrorCode::kMissingGold, doc_id + " not in gold corpus");
  }
  if (!it->second.label) throw Error(ErrorCode::kMissingGold, doc_id + " has no gold label");
  return it->second;
}

std::map<std::string, MetricsReport> slice_report(std::span<const PredictedDoc> predictions,
                                                  const GoldIndex& gold, SliceKey key) {
  std::map<std::string, ConfusionCounts> counts;
  for (const auto& p : predictions) {
    const auto& doc = gold.at(p.doc_id);
    counts[slice_value(doc, key)].add(p.predicted, *doc.label);
  }
  std::map<std::string, MetricsReport> out;
  for (const auto& [name, c] : counts) out.emplace(name, metrics_from_counts(c));
  return out;
}

EvaluationReport evaluate(std::span<const PredictedDoc> predictions, const GoldIndex& gold,
                          std::optional<SliceKey> slice_key) {
  if (predictions.empty()) throw Error(ErrorCode::kEmptyEvaluation, "no verdicts");
  ConfusionCounts counts;
  for (const auto& p : predictions) counts.add(p.predicted, *gold.at(p.doc_id).label);
  EvaluationReport report;
  report.global = metrics_from_counts(counts);
  report.slice_key = slice_key;
  if (slice_key) report.slices = slice_report(predictions, gold, *slice_key);
  return report;
}

nlohmann::json to_json(const MetricsReport& r) {
  const auto& c = r.counts;
  return {{"positive_class", "machine"},
          {"counts", {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}}},
          {"total", c.total()},
          {"accuracy", optional_json(r.accuracy)},
          {"precision", optional_json(r.precision)},
          {"recall", optional_json(r.recall)},
          {"f1", optional_json(r.f1)},
          {"false_positive_rate", optional_json(r.fpr)},
          {"false_negative_rate", optional_json(r.fnr)}};
}

nlohmann::json to_json(const EvaluationReport& report) {
  nlohmann::json j = to_json(report.global);
  if (report.slice_key) {
    j["slice_key"] = slice_key_name(*report.slice_key);
    nlohmann::json slices = nlohmann::json::object();
    for (const auto& [name, r] : report.slices) slices[name] = to_json(r);
    j["slices"] = std::move(slices);
  }
  return j;
}

std::string render_text(const EvaluationReport& report) {
  std::ostringstream out;
  auto block = [&out](const MetricsReport& r) {
    out << "  accuracy             " << fixed3(r.accuracy) << '\n'
        << "  precision            " << fixed3(r.precision) << '\n'
        << "  recall               " << fixed3(r.recall) << '\n'
        << "  f1                   " << fixed3(r.f1) << '\n'
        << "  false positive rate  " << fixed3(r.fpr) << '\n'
        << "  false negative rate  " << fixed3(r.fnr) << '\n';
  };
  out << "positive class: machine\n";
  out << "documents: " << report.global.counts.total() << '\n';
  block(report.global);
  out << confusion_table(report.global.counts);
  if (report.slice_key) {
    for (const auto& [name, r] : report.slices) {
      out << '\n' << slice_key_name(*report.slice_key) << " = " << name << " ("
          << r.counts.total() << " documents)\n";
      block(r);
    }
  }
  return out.str();
}

}  // namespace segvote
