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

#include "segvote/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "segvote/error.hpp"
#include "segvote/rng.hpp"
#include "segvote/utf8.hpp"

namespace segvote {
namespace {

using nlohmann::json;

constexpr std::string_view kNgramFormat = "segvote-ngram";
constexpr int kNgramVersion = 1;

bool is_power_of_two(std::uint32_t x) { return x != 0 && (x & (x - 1)) == 0; }

// log(1 + e^z) without overflow.
double softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

// Binary cross-entropy of logit z against y in {0, 1}.
double bce_from_logit(double z, double y) { return softplus(z) - y * z; }

[[noreturn]] void bad_checkpoint(const std::string& why) {
  throw Error(ErrorCode::kBadCheckpoint, "n-gram checkpoint: " + why);
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double clamp_probability(double p) {
  return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor);
}

double logit_of(double p) {
  p = clamp_probability(p);
  return std::log(p / (1.0 - p));
}

SegmentScore score_from_probability(const Segment& seg, double p,
                                    std::string_view scorer_id) {
  const double clamped = clamp_probability(p);
  return {seg.doc_id, seg.index, clamped, std::log(clamped / (1.0 - clamped)),
          std::string(scorer_id)};
}

SegmentScore score_from_logit(const Segment& seg, double logit,
                              std::string_view scorer_id) {
  return {seg.doc_id, seg.index, sigmoid(logit), logit, std::string(scorer_id)};
}

void NgramFeatureConfig::validate() const {
  if (n_low < 1 || n_high < n_low) {
    throw Error(ErrorCode::kInvalidArgument, "n-gram orders must satisfy 1 <= n_low <= n_high");
  }
  if (!is_power_of_two(dim)) {
    throw Error(ErrorCode::kInvalidArgument, "feature dimension must be a power of two");
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<Feature> featurize(std::string_view text, const NgramFeatureConfig& cfg) {
  const auto cps = utf8::decode(text);
  std::string lowered;
  lowered.reserve(text.size());
  std::vector<std::size_t> offsets;
  offsets.reserve(cps.size() + 1);
  for (const auto& cp : cps) {
    offsets.push_back(lowered.size());
    utf8::append(lowered, utf8::to_lower(cp.value));
  }
  offsets.push_back(lowered.size());

  const std::uint32_t mask = cfg.dim - 1;
  std::vector<std::uint32_t> buckets;
  const std::string_view view(lowered);
  for (int n = cfg.n_low; n <= cfg.n_high; ++n) {
    const auto order = static_cast<std::size_t>(n);
    for (std::size_t i = 0; i + order <= cps.size(); ++i) {
      const auto gram = view.substr(offsets[i], offsets[i + order] - offsets[i]);
      buckets.push_back(static_cast<std::uint32_t>(fnv1a64(gram) & mask));
    }
  }
  std::sort(buckets.begin(), buckets.end());

  std::vector<Feature> out;
  for (const auto b : buckets) {
    if (!out.empty() && out.back().index == b) {
      out.back().count += 1.0;
    } else {
      out.push_back({b, 1.0});
    }
  }
  return out;
}

NgramScorerModel NgramScorerModel::zeros(const NgramFeatureConfig& cfg) {
  cfg.validate();
  NgramScorerModel model;
  model.features = cfg;
  model.weights.assign(cfg.dim, 0.0);
  return model;
}

double NgramScorerModel::logit(std::span<const Feature> x) const {
  double z = bias;
  for (const auto& f : x) z += weights[f.index] * f.count;
  return z;
}

double NgramScorerModel::logit(std::string_view text) const {
  return logit(featurize(text, features));
}

void NgramScorerModel::validate() const {
  features.validate();
  if (weights.size() != features.dim) {
    throw Error(ErrorCode::kShapeMismatch, "weights length " +
                                               std::to_string(weights.size()) +
                                               " != dim " + std::to_string(features.dim));
  }
  if (!std::isfinite(bias) ||
      !std::all_of(weights.begin(), weights.end(), [](double w) { return std::isfinite(w); })) {
    throw Error(ErrorCode::kBadCheckpoint, "model has non-finite parameters");
  }
}

json to_json(const NgramScorerModel& model) {
  json j;
  j["format"] = kNgramFormat;
  j["version"] = kNgramVersion;
  j["n_low"] = model.features.n_low;
  j["n_high"] = model.features.n_high;
  j["dim"] = model.features.dim;
  j["bias"] = model.bias;
  j["weights"] = model.weights;
  const auto& m = model.meta;
  j["meta"] = {{"seed", m.seed},
               {"epochs", m.epochs},
               {"learning_rate", m.learning_rate},
               {"batch_size", m.batch_size},
               {"examples", m.examples},
               {"loss_trace", m.loss_trace}};
  return j;
}

NgramScorerModel ngram_model_from_json(const json& j) {
  if (!j.is_object() || j.value("format", "") != kNgramFormat) {
    bad_checkpoint("format is not " + std::string(kNgramFormat));
  }
  if (j.value("version", 0) != kNgramVersion) {
    bad_checkpoint("unsupported version " + j.value("version", json()).dump());
  }
  NgramScorerModel model;
  try {
    model.features.n_low = j.at("n_low").get<int>();
    model.features.n_high = j.at("n_high").get<int>();
    model.features.dim = j.at("dim").get<std::uint32_t>();
    model.bias = j.at("bias").get<double>();
    model.weights = j.at("weights").get<std::vector<double>>();
    if (auto meta = j.find("meta"); meta != j.end() && meta->is_object()) {
      auto& m = model.meta;
      m.seed = meta->value("seed", std::uint64_t{0});
      m.epochs = meta->value("epochs", 0);
      m.learning_rate = meta->value("learning_rate", 0.0);
      m.batch_size = meta->value("batch_size", std::size_t{0});
      m.examples = meta->value("examples", std::size_t{0});
      m.loss_trace = meta->value("loss_trace", std::vector<double>{});
    }
  } catch (const json::exception& e) {
    bad_checkpoint(e.what());
  }
  model.validate();
  return model;
}

void save_ngram_model(const NgramScorerModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << to_json(model).dump() << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

NgramScorerModel load_ngram_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, path.string());
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) bad_checkpoint("not valid JSON: " + path.string());
  return ngram_model_from_json(j);
}

NgramScorerModel train_ngram_scorer(std::span<const LabeledSegment> train,
                                    const NgramTrainConfig& cfg,
                                    const EpochCallback& on_epoch) {
  cfg.features.validate();
  if (cfg.batch_size == 0 || cfg.epochs < 0 || !std::isfinite(cfg.learning_rate)) {
    throw Error(ErrorCode::kInvalidArgument, "bad training configuration");
  }
  const bool has_human = std::any_of(train.begin(), train.end(), [](const auto& e) {
    return e.label == Label::kHuman;
  });
  const bool has_machine = std::any_of(train.begin(), train.end(), [](const auto& e) {
    return e.label == Label::kMachine;
  });
  if (!has_human || !has_machine) {
    throw Error(ErrorCode::kDegenerateTraining,
                "training data needs both labels (" + std::to_string(train.size()) +
                    " examples)");
  }

  std::vector<std::vector<Feature>> xs;
  std::vector<double> ys;
  xs.reserve(train.size());
  ys.reserve(train.size());
  for (const auto& ex : train) {
    xs.push_back(featurize(ex.segment.text, cfg.features));
    ys.push_back(ex.label == Label::kMachine ? 1.0 : 0.0);
  }

  NgramScorerModel model = NgramScorerModel::zeros(cfg.features);
  auto& meta = model.meta;
  meta.seed = cfg.seed;
  meta.epochs = cfg.epochs;
  meta.learning_rate = cfg.learning_rate;
  meta.batch_size = cfg.batch_size;
  meta.examples = train.size();

  auto mean_loss = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      total += bce_from_logit(model.logit(xs[i]), ys[i]);
    }
    return total / static_cast<double>(xs.size());
  };
  auto record = [&](int epoch) {
    const double loss = mean_loss();
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::kNonFiniteLoss,
                  "loss became non-finite at epoch " + std::to_string(epoch) +
                      " with learning rate " + std::to_string(cfg.learning_rate) +
                      "; lower the learning rate");
    }
    meta.loss_trace.push_back(loss);
    if (on_epoch) on_epoch(epoch, loss);
  };
  record(0);

  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(cfg.seed);
  std::vector<double> grad(cfg.features.dim, 0.0);
  std::vector<std::uint32_t> touched;
  std::vector<double> residuals;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const double scale = cfg.learning_rate / static_cast<double>(end - begin);
      // Residuals first so the whole batch sees the same weights.
      residuals.clear();
      for (std::size_t k = begin; k < end; ++k) {
        const auto i = order[k];
        residuals.push_back(sigmoid(model.logit(xs[i])) - ys[i]);
      }
      double bias_grad = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const double r = residuals[k - begin];
        bias_grad += r;
        for (const auto& f : xs[order[k]]) {
          if (grad[f.index] == 0.0) touched.push_back(f.index);
          grad[f.index] += r * f.count;
        }
      }
      for (const auto j : touched) {
        model.weights[j] -= scale * grad[j];
        grad[j] = 0.0;
      }
      touched.clear();
      model.bias -= scale * bias_grad;
    }
    record(epoch);
  }
  return model;
}

NgramScorer::NgramScorer(std::shared_ptr<const NgramScorerModel> model,
                         std::string scorer_id)
    : model_(std::move(model)), scorer_id_(std::move(scorer_id)) {
  model_->validate();
}

std::vector<SegmentScore> NgramScorer::score_batch(std::span<const Segment> segments) {
  std::vector<SegmentScore> out;
  out.reserve(segments.size());
  for (const auto& seg : segments) {
    out.push_back(score_from_logit(seg, model_->logit(seg.text), scorer_id_));
  }
  return out;
}

ExternalScorer::ExternalScorer(std::unique_ptr<protocol::LineChannel> channel,
                               protocol::Timeout timeout)
    : client_(std::move(channel), timeout) {
  const json ack = client_.handshake(protocol::kScorerToken);
  auto id = ack.find("scorer_id");
  if (id == ack.end() || !id->is_string()) {
    throw Error(ErrorCode::kScorerProtocolError, "ack without string scorer_id");
  }
  scorer_id_ = id->get<std::string>();
}

std::vector<SegmentScore> ExternalScorer::score_batch(std::span<const Segment> segments) {
  std::lock_guard lock(mu_);
  std::vector<json> requests;
  requests.reserve(segments.size());
  for (const auto& seg : segments) requests.push_back({{"text", seg.text}});
  const auto replies = client_.call(std::move(requests));

  std::vector<SegmentScore> out;
  out.reserve(segments.size());
  std::string first_error;
  for (std::size_t i = 0; i < replies.size(); ++i) {
    const auto& reply = replies[i];
    if (auto err = reply.find("error"); err != reply.end()) {
      if (first_error.empty()) {
        first_error = "peer error for segment " + segments[i].doc_id + "/" +
                      std::to_string(segments[i].index) + ": " +
                      (err->is_string() ? err->get<std::string>() : err->dump());
      }
      continue;
    }
    auto p = reply.find("p_machine");
    if (p == reply.end() || !p->is_number()) {
      throw Error(ErrorCode::kScorerProtocolError, "reply without numeric p_machine");
    }
    const double value = p->get<double>();
    if (!(value >= 0.0 && value <= 1.0)) {
      throw Error(ErrorCode::kScorerProtocolError,
                  "p_machine outside [0,1]: " + p->dump());
    }
    out.push_back(score_from_probability(segments[i], value, scorer_id_));
  }
  if (!first_error.empty()) throw Error(ErrorCode::kScorerProtocolError, first_error);
  return out;
}

std::unique_ptr<ExternalScorer> connect_external_scorer(std::string_view selector,
                                                        protocol::Timeout timeout) {
  const auto endpoint = protocol::parse_endpoint(selector);
  return std::make_unique<ExternalScorer>(protocol::open_endpoint(endpoint, timeout),
                                          timeout);
}

}  // namespace segvote
