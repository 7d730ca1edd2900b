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
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "segvote/error.hpp"

namespace segvote {

// Serialized as 0 = Human, 1 = Machine. Machine is the positive class.
enum class Label : std::uint8_t { kHuman = 0, kMachine = 1 };

inline int label_value(Label label) { return static_cast<int>(label); }
std::optional<Label> label_from_int(std::int64_t value);
std::string_view label_name(Label label);

struct Document {
  std::string id;
  std::string text;  // trimmed, otherwise verbatim
  std::optional<Label> label;
  std::string language;  // empty when absent
  std::optional<std::string> generator;  // the record's "model" field
  std::optional<std::string> source;
  // Fields we do not model, carried through untouched.
  nlohmann::json metadata = nlohmann::json::object();

  bool operator==(const Document&) const = default;
};

enum class CorpusFormat { kJsonl };

struct ReaderOptions {
  CorpusFormat format = CorpusFormat::kJsonl;
  bool strict = false;
};

struct SkipReport {
  std::size_t line;
  ErrorCode code;
  std::string reason;
};

// Parses one JSONL record. `line` is 1-based and used for diagnostics and for
// the synthesized "<origin>#<line>" id when the record has none.
Document parse_document(std::string_view json_line, std::size_t line,
                        std::string_view origin);

std::string to_json_line(const Document& doc);

// Trims Unicode whitespace from both ends.
std::string_view trim(std::string_view text);

// Streaming JSONL reader. Holds one line in memory at a time plus the set of
// ids seen so far. Blank lines are ignored.
class CorpusReader {
 public:
  CorpusReader(const std::filesystem::path& path, ReaderOptions options = {});

  // Next valid document in file order, or nullopt at end of file. In strict
  // mode the first bad record throws; otherwise it is recorded in skipped().
  std::optional<Document> next();

  const std::vector<SkipReport>& skipped() const { return skipped_; }
  std::size_t lines_read() const { return line_no_; }

 private:
  std::ifstream in_;
  std::string origin_;
  ReaderOptions options_;
  std::size_t line_no_ = 0;
  std::unordered_set<std::string> seen_ids_;
  std::vector<SkipReport> skipped_;
};

struct LoadedCorpus {
  std::vector<Document> documents;
  std::vector<SkipReport> skipped;
};

LoadedCorpus load_corpus(const std::filesystem::path& path,
                         ReaderOptions options = {});

struct WordCountQuantiles {
  double min = 0, p25 = 0, median = 0, p75 = 0, max = 0, mean = 0;
};

struct CorpusStats {
  std::size_t total = 0;
  std::size_t human = 0;
  std::size_t machine = 0;
  std::size_t unlabeled = 0;
  std::map<std::string, std::size_t> by_language;
  std::map<std::string, std::size_t> by_generator;
  WordCountQuantiles word_counts;
};

// Accumulates stats over a stream; word counts are kept (one integer per
// document) so that exact quantiles can be reported.
class CorpusStatsBuilder {
 public:
  void add(const Document& doc);
  CorpusStats finish() const;

 private:
  CorpusStats stats_;
  std::vector<std::size_t> word_counts_;
};

CorpusStats corpus_stats(std::span<const Document> docs);

nlohmann::json to_json(const CorpusStats& stats);

// Linear-interpolation quantile (R type 7) over an already sorted range.
double sorted_quantile(std::span<const std::size_t> sorted, double q);

}  // namespace segvote
