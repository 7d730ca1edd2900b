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

#include "segvote/cli.hpp"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "segvote/corpus.hpp"
#include "segvote/ensemble.hpp"
#include "segvote/error.hpp"
#include "segvote/eval.hpp"
#include "segvote/rng.hpp"
#include "segvote/scoring.hpp"
#include "segvote/segmenter.hpp"
#include "segvote/syntax.hpp"

namespace segvote::cli {
namespace {

using nlohmann::json;

// Thrown for bad flag values discovered after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr std::size_t kDocsPerWorkerBlock = 256;

void setup_logging() {
  static bool done = false;
  if (!done) {
    auto logger = spdlog::stderr_logger_st("segvote");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    done = true;
  }
  const char* env = std::getenv("SEGVOTE_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  return out;
}

void report_skips(const std::vector<SkipReport>& skipped, const std::string& path) {
  for (const auto& s : skipped) {
    spdlog::warn("{}:{}: skipped ({}): {}", path, s.line, error_code_name(s.code), s.reason);
  }
}

void check_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw UsageError("--threshold must lie strictly between 0 and 1");
  }
}

SegmenterConfig segmenter_config(bool arabic_qmark) {
  SegmenterConfig cfg;
  cfg.arabic_question_mark = arabic_qmark;
  return cfg;
}

// --- segment ---------------------------------------------------------------

struct SegmentArgs {
  std::string in, out;
  bool strict = false;
  bool arabic_qmark = false;
};

int cmd_segment(const SegmentArgs& a) {
  CorpusReader reader(a.in, {CorpusFormat::kJsonl, a.strict});
  auto out = open_output(a.out);
  const auto cfg = segmenter_config(a.arabic_qmark);
  std::size_t docs = 0, segments = 0;
  while (auto doc = reader.next()) {
    for (const auto& seg : segment_text(*doc, cfg)) {
      json line = to_json(seg);
      if (doc->label) line["label"] = label_value(*doc->label);
      out << line.dump() << '\n';
      ++segments;
    }
    ++docs;
  }
  report_skips(reader.skipped(), a.in);
  spdlog::info("segmented {} documents into {} segments", docs, segments);
  return kExitOk;
}

// --- stats -------------------------------------------------------------------

struct StatsArgs {
  std::string in, out;
  bool strict = false;
};

int cmd_stats(const StatsArgs& a) {
  CorpusReader reader(a.in, {CorpusFormat::kJsonl, a.strict});
  CorpusStatsBuilder builder;
  while (auto doc = reader.next()) builder.add(*doc);
  report_skips(reader.skipped(), a.in);
  json j = to_json(builder.finish());
  j["skipped"] = reader.skipped().size();
  if (a.out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    open_output(a.out) << j.dump(2) << '\n';
  }
  return kExitOk;
}

// --- train-scorer --------------------------------------------------------------

struct TrainScorerArgs {
  std::string in, out;
  bool strict = false;
  bool arabic_qmark = false;
  int epochs = NgramTrainConfig{}.epochs;
  double lr = NgramTrainConfig{}.learning_rate;
  std::size_t batch = NgramTrainConfig{}.batch_size;
  std::uint64_t seed = 1;
  int n_low = 2, n_high = 4;
  int dim_bits = 18;
};

int cmd_train_scorer(const TrainScorerArgs& a) {
  if (a.dim_bits < 1 || a.dim_bits > 30) throw UsageError("--dim-bits must be in [1, 30]");
  if (a.n_low < 1 || a.n_high < a.n_low) throw UsageError("need 1 <= --n-low <= --n-high");
  if (a.batch == 0) throw UsageError("--batch-size must be positive");

  const auto corpus = load_corpus(a.in, {CorpusFormat::kJsonl, a.strict});
  report_skips(corpus.skipped, a.in);
  const auto seg_cfg = segmenter_config(a.arabic_qmark);
  std::vector<LabeledSegment> examples;
  std::size_t unlabeled = 0;
  for (const auto& doc : corpus.documents) {
    if (!doc.label) {
      ++unlabeled;
      continue;
    }
    for (auto& seg : segment_text(doc, seg_cfg)) examples.push_back({std::move(seg), *doc.label});
  }
  if (unlabeled > 0) spdlog::warn("ignored {} unlabeled documents", unlabeled);

  NgramTrainConfig cfg;
  cfg.features = {a.n_low, a.n_high, 1u << a.dim_bits};
  cfg.epochs = a.epochs;
  cfg.learning_rate = a.lr;
  cfg.batch_size = a.batch;
  cfg.seed = a.seed;
  spdlog::info("training n-gram scorer on {} segments", examples.size());
  const auto model = train_ngram_scorer(examples, cfg, [](int epoch, double loss) {
    spdlog::info("epoch {} loss {:.6f}", epoch, loss);
  });
  save_ngram_model(model, a.out);
  return kExitOk;
}

// --- detect ----------------------------------------------------------------------

struct DetectArgs {
  std::string in, out, scorer;
  std::string scheme = "soft";
  double threshold = 0.95;
  std::size_t workers = 1;
  int timeout_ms = 30000;
  bool strict = false;
  bool arabic_qmark = false;
};

std::vector<std::unique_ptr<Scorer>> open_scorers(const std::string& selector,
                                                  std::size_t count, int timeout_ms) {
  std::vector<std::unique_ptr<Scorer>> scorers;
  if (selector.starts_with("builtin:")) {
    auto model = std::make_shared<const NgramScorerModel>(load_ngram_model(selector.substr(8)));
    for (std::size_t i = 0; i < count; ++i) scorers.push_back(std::make_unique<NgramScorer>(model));
    return scorers;
  }
  if (!selector.starts_with("exec:") && !selector.starts_with("tcp:")) {
    throw UsageError("--scorer must be builtin:PATH, exec:CMD or tcp:HOST:PORT");
  }
  // One protocol handle per worker.
  for (std::size_t i = 0; i < count; ++i) {
    scorers.push_back(
        connect_external_scorer(selector, protocol::Timeout(timeout_ms)));
  }
  spdlog::info("connected to scorer '{}'", scorers.front()->id());
  return scorers;
}

// Scores one contiguous run of documents with a single pipelined batch.
void detect_range(std::span<const Document> docs, std::span<Verdict> out,
                  const SegmenterConfig& seg_cfg, Scorer& scorer, const VotingConfig& voting) {
  std::vector<Segment> segments;
  std::vector<std::size_t> first;
  for (const auto& doc : docs) {
    first.push_back(segments.size());
    for (auto& seg : segment_text(doc, seg_cfg)) segments.push_back(std::move(seg));
  }
  first.push_back(segments.size());
  const auto scores = scorer.score_batch(segments);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto begin = first[d];
    const auto end = first[d + 1];
    std::vector<std::size_t> weights;
    for (std::size_t k = begin; k < end; ++k) weights.push_back(segments[k].word_count);
    out[d] = vote(std::span(scores).subspan(begin, end - begin), weights, voting);
    out[d].doc_id = docs[d].id;
  }
}

int cmd_detect(const DetectArgs& a) {
  check_threshold(a.threshold);
  if (a.workers == 0) throw UsageError("--workers must be >= 1");
  VotingConfig voting;
  try {
    voting.scheme = parse_scheme(a.scheme);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  voting.threshold = a.threshold;
  const auto seg_cfg = segmenter_config(a.arabic_qmark);

  CorpusReader reader(a.in, {CorpusFormat::kJsonl, a.strict});
  auto scorers = open_scorers(a.scorer, a.workers, a.timeout_ms);
  auto out = open_output(a.out);

  std::size_t total = 0;
  std::vector<Document> block;
  for (;;) {
    block.clear();
    while (block.size() < kDocsPerWorkerBlock * a.workers) {
      auto doc = reader.next();
      if (!doc) break;
      block.push_back(std::move(*doc));
    }
    if (block.empty()) break;

    std::vector<Verdict> verdicts(block.size());
    const std::size_t chunk = (block.size() + a.workers - 1) / a.workers;
    std::vector<std::exception_ptr> errors(a.workers);
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < a.workers; ++w) {
      const std::size_t begin = std::min(block.size(), w * chunk);
      const std::size_t end = std::min(block.size(), begin + chunk);
      if (begin == end) continue;
      auto job = [&, w, begin, end] {
        try {
          detect_range(std::span<const Document>(block).subspan(begin, end - begin),
                       std::span(verdicts).subspan(begin, end - begin), seg_cfg,
                       *scorers[w], voting);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      };
      if (a.workers == 1) {
        job();
      } else {
        threads.emplace_back(job);
      }
    }
    for (auto& t : threads) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    // Reorder buffer: verdicts are written in input order.
    for (const auto& v : verdicts) out << to_json(v).dump() << '\n';
    total += block.size();
  }
  report_skips(reader.skipped(), a.in);
  spdlog::info("wrote {} verdicts", total);
  return kExitOk;
}

// --- syntax ------------------------------------------------------------------------

struct SyntaxInputArgs {
  std::string in;
  std::string tagger;
  int timeout_ms = 30000;
  std::size_t max_length = syntax::kDefaultMaxLength;
  bool strict = false;
};

syntax::TaggedCorpus load_syntax_input(const SyntaxInputArgs& a) {
  if (a.max_length == 0) throw UsageError("--max-length must be positive");
  syntax::TaggedCorpus corpus;
  if (a.tagger.empty()) {
    corpus = syntax::load_tagged(a.in, a.strict, a.max_length);
  } else {
    auto docs = load_corpus(a.in, {CorpusFormat::kJsonl, a.strict});
    report_skips(docs.skipped, a.in);
    auto tagger = syntax::connect_external_tagger(a.tagger, protocol::Timeout(a.timeout_ms));
    corpus = tagger->tag(docs.documents, a.max_length);
  }
  report_skips(corpus.skipped, a.in);
  std::size_t truncated = 0, unknown = 0;
  for (const auto& d : corpus.docs) {
    truncated += d.sequence.truncated() ? 1 : 0;
    unknown += d.sequence.unknown;
  }
  if (truncated > 0) spdlog::info("{} sequences truncated to {} tags", truncated, a.max_length);
  if (unknown > 0) spdlog::info("{} unknown tags mapped to UNK", unknown);
  return corpus;
}

struct TrainSyntaxArgs {
  SyntaxInputArgs input;
  std::string out, history;
  syntax::ModelConfig model;
  syntax::TrainConfig train;
  double val_fraction = 0.2;
  bool shuffle_labels = false;
};

int cmd_train_syntax(TrainSyntaxArgs a) {
  if (!(a.val_fraction >= 0.0 && a.val_fraction < 1.0)) {
    throw UsageError("--val-fraction must be in [0, 1)");
  }
  if (a.train.batch_size == 0) throw UsageError("--batch-size must be positive");
  auto corpus = load_syntax_input(a.input);
  std::vector<syntax::LabeledSequence> data;
  for (auto& d : corpus.docs) {
    if (d.label) data.push_back({std::move(d.sequence), *d.label});
  }
  if (data.size() != corpus.docs.size()) {
    spdlog::warn("ignored {} unlabeled sequences", corpus.docs.size() - data.size());
  }
  if (a.shuffle_labels) {
    std::vector<Label> labels;
    for (const auto& ex : data) labels.push_back(ex.label);
    Rng rng(a.train.seed ^ 0x5eedf00dULL);
    rng.shuffle(std::span<Label>(labels));
    for (std::size_t i = 0; i < data.size(); ++i) data[i].label = labels[i];
  }
  // Deterministic validation split.
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng split_rng(a.train.seed + 0x9e3779b97f4a7c15ULL);
  split_rng.shuffle(std::span<std::size_t>(order));
  const auto n_val = static_cast<std::size_t>(a.val_fraction * static_cast<double>(data.size()));
  std::vector<syntax::LabeledSequence> train_set, val_set;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < n_val ? val_set : train_set).push_back(data[order[k]]);
  }

  spdlog::info("training syntax model on {} sequences ({} validation)", train_set.size(),
               val_set.size());
  auto init = syntax::SyntaxModel::initialize(a.model, a.train.seed);
  json history = json::array();
  auto result = syntax::train(std::move(init), train_set, val_set, a.train,
                              [&history](const syntax::EpochStats& s) {
                                json row = {{"epoch", s.epoch},
                                            {"train_loss", s.train_loss},
                                            {"train_accuracy", s.train_accuracy}};
                                row["validation_loss"] =
                                    s.validation_loss ? json(*s.validation_loss) : json(nullptr);
                                row["validation_accuracy"] = s.validation_accuracy
                                                                 ? json(*s.validation_accuracy)
                                                                 : json(nullptr);
                                spdlog::info("{}", row.dump());
                                history.push_back(std::move(row));
                              });
  syntax::save_model(result.model, a.out);
  if (!a.history.empty()) {
    auto out = open_output(a.history);
    for (const auto& row : history) out << row.dump() << '\n';
  }
  return kExitOk;
}

struct DetectSyntaxArgs {
  SyntaxInputArgs input;
  std::string model, out;
  double threshold = 0.5;
};

int cmd_detect_syntax(const DetectSyntaxArgs& a) {
  check_threshold(a.threshold);
  const auto model = syntax::load_model(a.model);
  const auto corpus = load_syntax_input(a.input);
  auto out = open_output(a.out);
  for (const auto& d : corpus.docs) {
    const auto pass = syntax::forward(model, d.sequence);
    const bool machine = pass.p_machine > a.threshold;
    json line = {{"doc_id", d.sequence.doc_id},
                 {"predicted", machine ? 1 : 0},
                 {"aggregate", pass.p_machine},
                 {"scheme", "syntax"},
                 {"threshold", a.threshold},
                 {"length", d.sequence.length()},
                 {"truncated", d.sequence.truncated()}};
    out << line.dump() << '\n';
  }
  spdlog::info("wrote {} verdicts", corpus.docs.size());
  return kExitOk;
}

// --- evaluate ------------------------------------------------------------------

struct EvaluateArgs {
  std::string verdicts, gold, slice, out, csv, text;
};

std::vector<PredictedDoc> load_predictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, path);
  std::vector<PredictedDoc> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json row = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (row.is_discarded() || !row.is_object() || !row.contains("doc_id") ||
        !row["doc_id"].is_string() || !row.contains("predicted") ||
        !row["predicted"].is_number_integer()) {
      throw MalformedRecordError(line_no, "verdict needs string doc_id and integer predicted");
    }
    auto label = label_from_int(row["predicted"].get<std::int64_t>());
    if (!label) throw MalformedRecordError(line_no, "predicted must be 0 or 1");
    out.push_back({row["doc_id"].get<std::string>(), *label});
  }
  return out;
}

int cmd_evaluate(const EvaluateArgs& a) {
  std::optional<SliceKey> key;
  if (!a.slice.empty()) {
    try {
      key = parse_slice_key(a.slice);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  const auto predictions = load_predictions(a.verdicts);
  auto gold_corpus = load_corpus(a.gold);
  report_skips(gold_corpus.skipped, a.gold);
  const GoldIndex gold(std::move(gold_corpus.documents));
  const auto report = evaluate(predictions, gold, key);

  const std::string json_text = to_json(report).dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << json_text;
  } else {
    open_output(a.out) << json_text;
  }
  if (!a.csv.empty()) open_output(a.csv) << confusion_csv(report.global.counts);
  if (!a.text.empty()) open_output(a.text) << render_text(report);
  return kExitOk;
}

// --- gradcheck ---------------------------------------------------------------------

struct GradcheckArgs {
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::size_t length = 3;
  syntax::ModelConfig model{2, 2, 2};
  double epsilon = 1e-4;
  double tolerance = 1e-4;
};

int cmd_gradcheck(const GradcheckArgs& a) {
  if (a.length == 0) throw UsageError("--length must be positive");
  bool ok = true;
  for (const auto seed : a.seeds) {
    const auto model = syntax::SyntaxModel::initialize(a.model, seed);
    Rng rng(seed ^ 0xa5a5a5a5ULL);
    syntax::UposSequence seq;
    for (std::size_t t = 0; t < a.length; ++t) {
      seq.tags.push_back(static_cast<std::uint8_t>(rng.index(syntax::kUposTags.size())));
    }
    seq.original_length = seq.tags.size();
    const Label gold = rng.index(2) == 1 ? Label::kMachine : Label::kHuman;
    const auto check = syntax::gradient_check(model, seq, gold, a.epsilon);
    for (const auto& block : check.blocks) {
      std::cout << "seed " << seed << "  " << block.name << "  max_rel_err "
                << block.max_relative_error << '\n';
    }
    const bool passed = check.passed(a.tolerance);
    std::cout << "seed " << seed << "  " << (passed ? "PASS" : "FAIL") << "  max "
              << check.max_relative_error << '\n';
    ok = ok && passed;
  }
  return ok ? kExitOk : kExitDataError;
}

}  // namespace

int run(int argc, const char* const* argv) {
  setup_logging();
  CLI::App app{"segvote: segment, score and vote machine-generated text detection"};
  app.require_subcommand(1);

  SegmentArgs seg;
  auto* c_segment = app.add_subcommand("segment", "Split corpus documents into segments");
  c_segment->add_option("--in", seg.in, "Corpus JSONL")->required();
  c_segment->add_option("--out", seg.out, "Segments JSONL")->required();
  c_segment->add_flag("--strict", seg.strict, "Abort on the first malformed record");
  c_segment->add_flag("--arabic-qmark", seg.arabic_qmark, "Also split at U+061F");

  StatsArgs st;
  auto* c_stats = app.add_subcommand("stats", "Corpus label/language/length statistics");
  c_stats->add_option("--in", st.in, "Corpus JSONL")->required();
  c_stats->add_option("--out", st.out, "Output JSON (default stdout)");
  c_stats->add_flag("--strict", st.strict);

  TrainScorerArgs ts;
  auto* c_train = app.add_subcommand("train-scorer", "Train the built-in n-gram scorer");
  c_train->add_option("--in", ts.in, "Labeled corpus JSONL")->required();
  c_train->add_option("--out", ts.out, "Model checkpoint JSON")->required();
  c_train->add_option("--epochs", ts.epochs)->check(CLI::NonNegativeNumber);
  c_train->add_option("--lr", ts.lr);
  c_train->add_option("--batch-size", ts.batch);
  c_train->add_option("--seed", ts.seed);
  c_train->add_option("--n-low", ts.n_low);
  c_train->add_option("--n-high", ts.n_high);
  c_train->add_option("--dim-bits", ts.dim_bits, "log2 of the feature dimension");
  c_train->add_flag("--strict", ts.strict);
  c_train->add_flag("--arabic-qmark", ts.arabic_qmark);

  DetectArgs dt;
  auto* c_detect = app.add_subcommand("detect", "Segment, score and vote on each document");
  c_detect->add_option("--in", dt.in, "Corpus JSONL")->required();
  c_detect->add_option("--scorer", dt.scorer, "builtin:PATH | exec:CMD | tcp:HOST:PORT")
      ->required();
  c_detect->add_option("--scheme", dt.scheme, "soft | hard | wsoft")
      ->check(CLI::IsMember({"soft", "hard", "wsoft"}));
  c_detect->add_option("--threshold", dt.threshold);
  c_detect->add_option("--out", dt.out, "Verdicts JSONL")->required();
  c_detect->add_option("--workers", dt.workers);
  c_detect->add_option("--timeout-ms", dt.timeout_ms);
  c_detect->add_flag("--strict", dt.strict);
  c_detect->add_flag("--arabic-qmark", dt.arabic_qmark);

  auto add_syntax_input = [](CLI::App* cmd, SyntaxInputArgs& in) {
    cmd->add_option("--in", in.in, "Tagged JSONL, or a corpus when --tagger is given")
        ->required();
    cmd->add_option("--tagger", in.tagger, "exec:CMD | tcp:HOST:PORT UPOS tagger");
    cmd->add_option("--timeout-ms", in.timeout_ms);
    cmd->add_option("--max-length", in.max_length);
    cmd->add_flag("--strict", in.strict);
  };

  TrainSyntaxArgs tsx;
  auto* c_tsx = app.add_subcommand("train-syntax", "Train the BiLSTM+attention UPOS classifier");
  add_syntax_input(c_tsx, tsx.input);
  c_tsx->add_option("--out", tsx.out, "Model checkpoint JSON")->required();
  c_tsx->add_option("--history", tsx.history, "Per-epoch stats JSONL");
  c_tsx->add_option("--epochs", tsx.train.epochs)->check(CLI::NonNegativeNumber);
  c_tsx->add_option("--lr", tsx.train.learning_rate);
  c_tsx->add_option("--batch-size", tsx.train.batch_size);
  c_tsx->add_option("--clip", tsx.train.clip_norm)->check(CLI::PositiveNumber);
  c_tsx->add_option("--seed", tsx.train.seed);
  c_tsx->add_option("--val-fraction", tsx.val_fraction);
  c_tsx->add_option("--embedding-dim", tsx.model.embedding_dim)->check(CLI::PositiveNumber);
  c_tsx->add_option("--hidden", tsx.model.hidden)->check(CLI::PositiveNumber);
  c_tsx->add_option("--layers", tsx.model.layers)->check(CLI::PositiveNumber);
  c_tsx->add_flag("--shuffle-labels", tsx.shuffle_labels, "Permute labels (chance baseline)");

  DetectSyntaxArgs dsx;
  auto* c_dsx = app.add_subcommand("detect-syntax", "Classify UPOS sequences");
  add_syntax_input(c_dsx, dsx.input);
  c_dsx->add_option("--model", dsx.model, "Syntax checkpoint JSON")->required();
  c_dsx->add_option("--threshold", dsx.threshold);
  c_dsx->add_option("--out", dsx.out, "Verdicts JSONL")->required();

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Metrics and confusion matrix from verdicts");
  c_eval->add_option("--verdicts", ev.verdicts)->required();
  c_eval->add_option("--gold", ev.gold, "Labeled corpus JSONL")->required();
  c_eval->add_option("--slice", ev.slice, "language | generator | source");
  c_eval->add_option("--out", ev.out, "Report JSON (default stdout)");
  c_eval->add_option("--csv", ev.csv, "Confusion matrix CSV");
  c_eval->add_option("--text", ev.text, "Rendered text report");

  GradcheckArgs gc;
  auto* c_grad = app.add_subcommand("gradcheck", "Finite-difference check of the syntax model");
  c_grad->add_option("--seed", gc.seeds, "Repeatable");
  c_grad->add_option("--length", gc.length);
  c_grad->add_option("--embedding-dim", gc.model.embedding_dim)->check(CLI::PositiveNumber);
  c_grad->add_option("--hidden", gc.model.hidden)->check(CLI::PositiveNumber);
  c_grad->add_option("--layers", gc.model.layers)->check(CLI::PositiveNumber);
  c_grad->add_option("--epsilon", gc.epsilon)->check(CLI::PositiveNumber);
  c_grad->add_option("--tolerance", gc.tolerance)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, std::cerr, std::cerr);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*c_segment) return cmd_segment(seg);
    if (*c_stats) return cmd_stats(st);
    if (*c_train) return cmd_train_scorer(ts);
    if (*c_detect) return cmd_detect(dt);
    if (*c_tsx) return cmd_train_syntax(tsx);
    if (*c_dsx) return cmd_detect_syntax(dsx);
    if (*c_eval) return cmd_evaluate(ev);
    if (*c_grad) return cmd_gradcheck(gc);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidArgument) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitUsage;
    }
    spdlog::error("{}", e.what());
    return kExitDataError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitDataError;
  }
  return kExitUsage;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace segvote::cli
