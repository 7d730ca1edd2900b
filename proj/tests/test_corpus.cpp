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

#include <algorithm>

#include "doctest.h"
#include "segvote/corpus.hpp"
#include "segvote/rng.hpp"
#include "support/synthetic.hpp"
#include "support/temp.hpp"

using namespace segvote;
using segvote::testing::TempDir;

TEST_CASE("record maps its fields onto a Document") {
  const auto doc = parse_document(
      R"({"id":"a1","text":"Hi there.","label":1,"model":"chatGPT","source":"reddit","language":"en"})",
      1, "c.jsonl");
  CHECK(doc.id == "a1");
  CHECK(doc.text == "Hi there.");
  REQUIRE(doc.label);
  CHECK(*doc.label == Label::kMachine);
  CHECK(doc.generator == "chatGPT");
  CHECK(doc.source == "reddit");
  CHECK(doc.language == "en");
  CHECK(doc.metadata.empty());
}

TEST_CASE("blank text is a malformed record") {
  try {
    parse_document(R"({"id":"a2","text":"   "})", 7, "c.jsonl");
    FAIL("expected MalformedRecord");
  } catch (const MalformedRecordError& e) {
    CHECK(e.line() == 7);
    CHECK(e.code() == ErrorCode::kMalformedRecord);
  }
}

TEST_CASE("labels other than 0 and 1 are rejected") {
  for (const char* label : {"2", "-1", "0.5", "\"1\"", "true"}) {
    CAPTURE(label);
    const std::string line = std::string(R"({"id":"x","text":"t","label":)") + label + "}";
    CHECK_THROWS_AS(parse_document(line, 1, "c"), MalformedRecordError);
  }
  CHECK(*parse_document(R"({"text":"t","label":0})", 1, "c").label == Label::kHuman);
  CHECK_FALSE(parse_document(R"({"text":"t","label":null})", 1, "c").label);
}

TEST_CASE("missing id is synthesized from file name and line") {
  CHECK(parse_document(R"({"text":"hello"})", 12, "train.jsonl").id == "train.jsonl#12");
}

TEST_CASE("language must be a lowercase 2-3 letter code") {
  CHECK_THROWS_AS(parse_document(R"({"text":"t","language":"EN"})", 1, "c"), MalformedRecordError);
  CHECK_THROWS_AS(parse_document(R"({"text":"t","language":"e"})", 1, "c"), MalformedRecordError);
  CHECK_THROWS_AS(parse_document(R"({"text":"t","language":"engl"})", 1, "c"),
                  MalformedRecordError);
  CHECK(parse_document(R"({"text":"t","language":"urd"})", 1, "c").language == "urd");
}

TEST_CASE("unknown fields are preserved and text is only trimmed") {
  const auto doc = parse_document(
      R"({"id":"q","text":"  Two  spaces\tinside.\n","prompt":"p","extra":{"k":[1,2]}})", 1, "c");
  CHECK(doc.text == "Two  spaces\tinside.");
  CHECK(doc.metadata["prompt"] == "p");
  CHECK(doc.metadata["extra"]["k"][1] == 2);
}

TEST_CASE("invalid UTF-8 and non-object lines are malformed") {
  CHECK_THROWS_AS(parse_document("{\"text\":\"\xff\xfe\"}", 1, "c"), MalformedRecordError);
  CHECK_THROWS_AS(parse_document("[1,2]", 1, "c"), MalformedRecordError);
  CHECK_THROWS_AS(parse_document("{\"text\":", 1, "c"), MalformedRecordError);
}

TEST_CASE("serialized documents parse back equal") {
  // Property over generated documents, including unicode text and metadata.
  Rng rng(99);
  const char* texts[] = {"Hello world.", "Привет, мир!", "你好。世界？", "مرحبا بالعالم؟",
                         "tab\tand \"quotes\" \\ slash"};
  for (int i = 0; i < 200; ++i) {
    Document doc;
    doc.id = "id-" + std::to_string(i);
    doc.text = texts[rng.index(5)];
    if (rng.uniform() < 0.7) doc.label = rng.index(2) ? Label::kMachine : Label::kHuman;
    if (rng.uniform() < 0.5) doc.language = "ru";
    if (rng.uniform() < 0.5) doc.generator = "bloomz";
    if (rng.uniform() < 0.5) doc.source = "wikipedia";
    if (rng.uniform() < 0.3) doc.metadata["n"] = i;
    const auto back = parse_document(to_json_line(doc), 1, "c");
    CHECK(back == doc);
  }
}

TEST_CASE("lenient load skips malformed lines and keeps going") {
  TempDir dir;
  const auto path = dir.write("c.jsonl",
                              "{\"id\":\"a\",\"text\":\"one\",\"label\":0}\n"
                              "{\"id\":\"b\",\"text\":\"   \"}\r\n"
                              "{\"id\":\"c\",\"text\":\"three\",\"label\":1}\r\n"
                              "\n"
                              "{\"id\":\"d\",\"text\":\"four\"}\n");
  const auto corpus = load_corpus(path);
  REQUIRE(corpus.documents.size() == 3);
  CHECK(corpus.documents[0].id == "a");
  CHECK(corpus.documents[1].id == "c");
  CHECK(corpus.documents[2].id == "d");
  REQUIRE(corpus.skipped.size() == 1);
  CHECK(corpus.skipped[0].line == 2);
  CHECK(corpus.skipped[0].code == ErrorCode::kMalformedRecord);
}

TEST_CASE("strict load aborts on the first malformed line") {
  TempDir dir;
  const auto path = dir.write("c.jsonl", "{\"text\":\"ok\"}\n{\"text\":5}\n{\"text\":\"ok\"}\n");
  try {
    load_corpus(path, {CorpusFormat::kJsonl, true});
    FAIL("expected MalformedRecord");
  } catch (const MalformedRecordError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("duplicate ids") {
  TempDir dir;
  const auto path = dir.write("c.jsonl",
                              "{\"id\":\"a\",\"text\":\"x\"}\n"
                              "{\"id\":\"a\",\"text\":\"y\"}\n");
  SUBCASE("strict raises DuplicateId") {
    try {
      load_corpus(path, {CorpusFormat::kJsonl, true});
      FAIL("expected DuplicateId");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDuplicateId);
    }
  }
  SUBCASE("lenient keeps the first and reports the second") {
    const auto corpus = load_corpus(path);
    REQUIRE(corpus.documents.size() == 1);
    CHECK(corpus.documents[0].text == "x");
    REQUIRE(corpus.skipped.size() == 1);
    CHECK(corpus.skipped[0].code == ErrorCode::kDuplicateId);
  }
}

TEST_CASE("missing file") {
  try {
    CorpusReader reader("/nonexistent/corpus.jsonl");
    FAIL("expected FileNotFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kFileNotFound);
  }
}

TEST_CASE("stats of an empty corpus are zero") {
  const auto s = corpus_stats({});
  CHECK(s.total == 0);
  CHECK(s.human == 0);
  CHECK(s.machine == 0);
  CHECK(s.word_counts.median == 0.0);
}

TEST_CASE("stats count labels") {
  std::vector<Document> docs;
  for (int i = 0; i < 5; ++i) {
    Document d;
    d.id = std::to_string(i);
    d.text = "w";
    d.label = i < 2 ? Label::kHuman : Label::kMachine;
    docs.push_back(d);
  }
  const auto s = corpus_stats(docs);
  CHECK(s.total == 5);
  CHECK(s.human == 2);
  CHECK(s.machine == 3);
  CHECK(s.human + s.machine + s.unlabeled == s.total);
  CHECK(s.by_language.at("unknown") == 5);
}

TEST_CASE("median word count matches a sort-and-index oracle") {
  Rng rng(5);
  for (const std::size_t n : {99u, 100u}) {
    std::vector<Document> docs;
    std::vector<std::size_t> lengths;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t words = 1 + rng.index(40);
      std::string text;
      for (std::size_t w = 0; w < words; ++w) text += (w ? " " : "") + std::string("w");
      Document d;
      d.id = std::to_string(i);
      d.text = text;
      docs.push_back(d);
      lengths.push_back(words);
    }
    std::sort(lengths.begin(), lengths.end());
    const double expected =
        n % 2 == 1 ? static_cast<double>(lengths[n / 2])
                   : (static_cast<double>(lengths[n / 2 - 1]) + static_cast<double>(lengths[n / 2])) / 2.0;
    const auto s = corpus_stats(docs);
    CHECK(s.word_counts.median == expected);
    CHECK(s.word_counts.min == static_cast<double>(lengths.front()));
    CHECK(s.word_counts.max == static_cast<double>(lengths.back()));
  }
}

TEST_CASE("streaming reader handles a corpus much larger than any record") {
  TempDir dir;
  const auto path = dir.file("big.jsonl");
  {
    std::ofstream out(path);
    const auto docs = segvote::testing::two_process_corpus(10000, 3);
    for (const auto& d : docs) out << to_json_line(d) << '\n';
  }
  CorpusReader reader(path);
  std::size_t n = 0;
  std::size_t largest = 0;
  while (auto doc = reader.next()) {
    ++n;
    largest = std::max(largest, doc->text.size());
  }
  CHECK(n == 20000);
  CHECK(reader.skipped().empty());
  CHECK(largest < 1000);
}
