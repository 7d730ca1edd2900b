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

#include "segvote/segmenter.hpp"

#include <algorithm>

#include "segvote/error.hpp"
#include "segvote/utf8.hpp"

namespace segvote {

bool SegmenterConfig::is_marker(char32_t cp) const {
  if (arabic_question_mark && cp == U'؟') return true;
  return std::find(markers.begin(), markers.end(), cp) != markers.end();
}

bool is_newline(char32_t cp) {
  return cp == U'\n' || cp == U'\r' || cp == 0x85 || cp == 0x2028 ||
         cp == 0x2029;
}

std::vector<Segment> segment_text(std::string_view doc_id,
                                  std::string_view text,
                                  const SegmenterConfig& cfg) {
  const auto cps = utf8::decode(text);
  std::vector<Segment> out;

  auto flush = [&](std::size_t begin, std::size_t end) {
    while (begin < end && utf8::is_space(cps[begin].value)) ++begin;
    while (end > begin && utf8::is_space(cps[end - 1].value)) --end;
    if (begin == end) return;
    Segment seg;
    seg.doc_id = std::string(doc_id);
    seg.index = out.size();
    seg.span = {begin, end};
    seg.bytes = {cps[begin].byte_offset,
                 cps[end - 1].byte_offset + cps[end - 1].byte_length};
    seg.text = std::string(text.substr(seg.bytes.start,
                                       seg.bytes.end - seg.bytes.start));
    seg.word_count = word_count(seg.text);
    out.push_back(std::move(seg));
  };

  std::size_t start = 0;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t cp = cps[i].value;
    if (is_newline(cp)) {
      flush(start, i);
      start = i + 1;
    } else if (cfg.is_marker(cp)) {
      while (i + 1 < cps.size() && cfg.is_marker(cps[i + 1].value)) ++i;
      flush(start, i + 1);
      start = i + 1;
    }
  }
  flush(start, cps.size());

  if (out.empty()) {
    throw Error(ErrorCode::kEmptyDocument, "document '" + std::string(doc_id) +
                                               "' has no non-blank text");
  }
  return out;
}

std::vector<Segment> segment_text(const Document& doc,
                                  const SegmenterConfig& cfg) {
  return segment_text(doc.id, doc.text, cfg);
}

std::size_t word_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (const auto& cp : utf8::decode(text)) {
    const bool space = utf8::is_space(cp.value);
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

nlohmann::json to_json(const Segment& segment) {
  return {{"doc_id", segment.doc_id},   {"index", segment.index},
          {"text", segment.text},       {"start", segment.span.start},
          {"end", segment.span.end},    {"word_count", segment.word_count}};
}

}  // namespace segvote
