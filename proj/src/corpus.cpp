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

#include "segvote/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "segvote/segmenter.hpp"
#include "segvote/utf8.hpp"

namespace segvote {
namespace {

using nlohmann::json;

bool valid_language(std::string_view code) {
  if (code.size() < 2 || code.size() > 3) return false;
  return std::all_of(code.begin(), code.end(),
                     [](char c) { return c >= 'a' && c <= 'z'; });
}

std::optional<std::string> optional_string(const json& record,
                                           const char* key, std::size_t line) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw MalformedRecordError(line, std::string("field '") + key +
                                         "' must be a string");
  }
  return it->get<std::string>();
}

}  // namespace

std::optional<Label> label_from_int(std::int64_t value) {
  if (value == 0) return Label::kHuman;
  if (value == 1) return Label::kMachine;
  return std::nullopt;
}

std::string_view label_name(Label label) {
  return label == Label::kMachine ? "machine" : "human";
}

std::string_view trim(std::string_view text) {
  const auto cps = utf8::decode(text);
  std::size_t first = 0;
  while (first < cps.size() && utf8::is_space(cps[first].value)) ++first;
  if (first == cps.size()) return text.substr(text.size());
  std::size_t last = cps.size();
  while (last > first && utf8::is_space(cps[last - 1].value)) --last;
  const std::size_t begin = cps[first].byte_offset;
  const std::size_t end = cps[last - 1].byte_offset + cps[last - 1].byte_length;
  return text.substr(begin, end - begin);
}

Document parse_document(std::string_view json_line, std::size_t line,
                        std::string_view origin) {
  if (!json_line.empty() && json_line.back() == '\r') json_line.remove_suffix(1);
  if (!utf8::is_valid(json_line)) {
    throw MalformedRecordError(line, "invalid UTF-8");
  }
  json record;
  try {
    record = json::parse(json_line);
  } catch (const json::parse_error& e) {
    throw MalformedRecordError(line, std::string("invalid JSON: ") + e.what());
  }
  if (!record.is_object()) {
    throw MalformedRecordError(line, "record is not a JSON object");
  }

  Document doc;
  auto id = record.find("id");
  if (id == record.end() || id->is_null()) {
    doc.id = std::string(origin) + "#" + std::to_string(line);
  } else if (id->is_string()) {
    doc.id = id->get<std::string>();
  } else if (id->is_number_integer()) {
    doc.id = std::to_string(id->get<std::int64_t>());
  } else {
    throw MalformedRecordError(line, "field 'id' must be a string");
  }
  if (doc.id.empty()) throw MalformedRecordError(line, "empty id");

  auto text = record.find("text");
  if (text == record.end() || !text->is_string()) {
    throw MalformedRecordError(line, "missing string field 'text'");
  }
  doc.text = std::string(trim(text->get_ref<const std::string&>()));
  if (doc.text.empty()) throw MalformedRecordError(line, "empty text");

  auto label = record.find("label");
  if (label != record.end() && !label->is_null()) {
    if (!label->is_number_integer()) {
      throw MalformedRecordError(line, "label must be 0 or 1");
    }
    doc.label = label_from_int(label->get<std::int64_t>());
    if (!doc.label) throw MalformedRecordError(line, "label must be 0 or 1");
  }

  doc.generator = optional_string(record, "model", line);
  doc.source = optional_string(record, "source", line);
  if (auto lang = optional_string(record, "language", line)) {
    if (!valid_language(*lang)) {
      throw MalformedRecordError(line, "language must be a lowercase 2-3 letter code");
    }
    doc.language = std::move(*lang);
  }

  for (auto& [key, value] : record.items()) {
    if (key == "id" || key == "text" || key == "label" || key == "model" ||
        key == "source" || key == "language") {
      continue;
    }
    doc.metadata[key] = value;
  }
  return doc;
}

std::string to_json_line(const Document& doc) {
  json record = doc.metadata;
  record["id"] = doc.id;
  record["text"] = doc.text;
  if (doc.label) record["label"] = label_value(*doc.label);
  if (doc.generator) record["model"] = *doc.generator;
  if (doc.source) record["source"] = *doc.source;
  if (!doc.language.empty()) record["language"] = doc.language;
  return record.dump();
}

CorpusReader::CorpusReader(const std::filesystem::path& path,
                           ReaderOptions options)
    : in_(path, std::ios::binary),
      origin_(path.filename().string()),
      options_(options) {
  if (!in_) throw Error(ErrorCode::kFileNotFound, path.string());
}

std::optional<Document> CorpusReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (trim(line).empty()) continue;
    try {
      Document doc = parse_document(line, line_no_, origin_);
      if (!seen_ids_.insert(doc.id).second) {
        if (options_.strict) {
          throw Error(ErrorCode::kDuplicateId,
                      doc.id + " (line " + std::to_string(line_no_) + ")");
        }
        skipped_.push_back({line_no_, ErrorCode::kDuplicateId,
                            "duplicate id " + doc.id});
        continue;
      }
      return doc;
    } catch (const MalformedRecordError& e) {
      if (options_.strict) throw;
      skipped_.push_back({line_no_, ErrorCode::kMalformedRecord, e.reason()});
    }
  }
  if (in_.bad()) throw Error(ErrorCode::kIoError, "read failure in " + origin_);
  return std::nullopt;
}

LoadedCorpus load_corpus(const std::filesystem::path& path,
                         ReaderOptions options) {
  CorpusReader reader(path, options);
  LoadedCorpus out;
  while (auto doc = reader.next()) out.documents.push_back(std::move(*doc));
  out.skipped = reader.skipped();
  return out;
}

double sorted_quantile(std::span<const std::size_t> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return static_cast<double>(sorted[lo]) +
         frac * (static_cast<double>(sorted[hi]) - static_cast<double>(sorted[lo]));
}

void CorpusStatsBuilder::add(const Document& doc) {
  ++stats_.total;
  if (!doc.label) {
    ++stats_.unlabeled;
  } else if (*doc.label == Label::kMachine) {
    ++stats_.machine;
  } else {
    ++stats_.human;
  }
  ++stats_.by_language[doc.language.empty() ? "unknown" : doc.language];
  ++stats_.by_generator[doc.generator.value_or("unknown")];
  word_counts_.push_back(word_count(doc.text));
}

CorpusStats CorpusStatsBuilder::finish() const {
  CorpusStats out = stats_;
  if (word_counts_.empty()) return out;
  std::vector<std::size_t> sorted = word_counts_;
  std::sort(sorted.begin(), sorted.end());
  auto& wc = out.word_counts;
  wc.min = static_cast<double>(sorted.front());
  wc.p25 = sorted_quantile(sorted, 0.25);
  wc.median = sorted_quantile(sorted, 0.5);
  wc.p75 = sorted_quantile(sorted, 0.75);
  wc.max = static_cast<double>(sorted.back());
  wc.mean = static_cast<double>(std::accumulate(sorted.begin(), sorted.end(),
                                                std::size_t{0})) /
            static_cast<double>(sorted.size());
  return out;
}

CorpusStats corpus_stats(std::span<const Document> docs) {
  CorpusStatsBuilder builder;
  for (const auto& doc : docs) builder.add(doc);
  return builder.finish();
}

nlohmann::json to_json(const CorpusStats& stats) {
  json out;
  out["total"] = stats.total;
  out["labels"] = {{"human", stats.human},
                   {"machine", stats.machine},
                   {"unlabeled", stats.unlabeled}};
  out["languages"] = stats.by_language;
  out["generators"] = stats.by_generator;
  const auto& wc = stats.word_counts;
  out["word_count"] = {{"min", wc.min},     {"p25", wc.p25},
                       {"median", wc.median}, {"p75", wc.p75},
                       {"max", wc.max},     {"mean", wc.mean}};
  return out;
}

}  // namespace segvote
