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
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "segvote/corpus.hpp"

namespace segvote {

// Half-open interval [start, end).
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Span&) const = default;
};

struct Segment {
  std::string doc_id;
  std::size_t index = 0;
  std::string text;
  Span span;   // code-point offsets into the source text
  Span bytes;  // the same interval in UTF-8 byte offsets
  std::size_t word_count = 0;

  bool operator==(const Segment&) const = default;
};

struct SegmenterConfig {
  // Sentence-final markers. A run of consecutive markers is one terminator.
  std::vector<char32_t> markers = {U'.', U'!', U'?', U'。', U'！',
                                   U'？'};
  // Also split at U+061F ARABIC QUESTION MARK.
  bool arabic_question_mark = false;

  bool is_marker(char32_t cp) const;
};

// Paragraph boundaries: LF, CR, NEL, LINE SEPARATOR, PARAGRAPH SEPARATOR.
bool is_newline(char32_t cp);

// Splits at marker runs (the run stays with its segment) and at paragraph
// boundaries. Throws kEmptyDocument when the text is blank.
std::vector<Segment> segment_text(std::string_view doc_id,
                                  std::string_view text,
                                  const SegmenterConfig& cfg = {});

std::vector<Segment> segment_text(const Document& doc,
                                  const SegmenterConfig& cfg = {});

// Number of maximal runs of non-whitespace code points.
std::size_t word_count(std::string_view text);

// {"doc_id","index","text","start","end","word_count"}
nlohmann::json to_json(const Segment& segment);

}  // namespace segvote
