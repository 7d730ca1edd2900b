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

#include "segvote/syntax.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "segvote/error.hpp"
#include "segvote/rng.hpp"
#include "segvote/scoring.hpp"

namespace segvote::syntax {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

constexpr std::string_view kFormat = "segvote-syntax";

double stable_sigmoid(double z) { return sigmoid(z); }

MatrixXd sigmoid_of(const MatrixXd& z) { return z.unaryExpr(&stable_sigmoid); }

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

std::vector<MatrixXd*> block_pointers(Parameters& p) {
  std::vector<MatrixXd*> out;
  p.visit([&out](const std::string&, MatrixXd& m) { out.push_back(&m); });
  return out;
}

void run_direction(const LstmDirection& p, const MatrixXd& x, bool reverse, int hidden,
                   DirectionCache& cache) {
  const auto steps = x.cols();
  const auto h4 = 4 * hidden;
  MatrixXd pre = p.w * x;
  pre.colwise() += p.b.col(0);
  for (auto* m : {&cache.i, &cache.f, &cache.g, &cache.o, &cache.c, &cache.h}) {
    m->resize(hidden, steps);
  }
  VectorXd h = VectorXd::Zero(hidden);
  VectorXd c = VectorXd::Zero(hidden);
  VectorXd z(h4);
  for (Eigen::Index step = 0; step < steps; ++step) {
    const Eigen::Index t = reverse ? steps - 1 - step : step;
    z.noalias() = pre.col(t) + p.u * h;
    const VectorXd i = sigmoid_of(z.segment(0, hidden));
    const VectorXd f = sigmoid_of(z.segment(hidden, hidden));
    const VectorXd g = z.segment(2 * hidden, hidden).array().tanh().matrix();
    const VectorXd o = sigmoid_of(z.segment(3 * hidden, hidden));
    c = f.cwiseProduct(c) + i.cwiseProduct(g);
    h = o.cwiseProduct(c.array().tanh().matrix());
    cache.i.col(t) = i;
    cache.f.col(t) = f;
    cache.g.col(t) = g;
    cache.o.col(t) = o;
    cache.c.col(t) = c;
    cache.h.col(t) = h;
  }
}

// Backpropagation through time for one direction. `dh_out` is the loss
// gradient w.r.t. each h_t from the layer above; input gradients are added
// into `dx`.
void backprop_direction(const LstmDirection& p, const MatrixXd& x, const DirectionCache& cache,
                        const MatrixXd& dh_out, bool reverse, int hidden, LstmDirection& grad,
                        MatrixXd& dx) {
  const auto steps = x.cols();
  MatrixXd dz(4 * hidden, steps);
  MatrixXd h_prev = MatrixXd::Zero(hidden, steps);
  VectorXd dh_next = VectorXd::Zero(hidden);
  VectorXd dc_next = VectorXd::Zero(hidden);
  const VectorXd zero = VectorXd::Zero(hidden);

  for (Eigen::Index step = steps - 1; step >= 0; --step) {
    const Eigen::Index t = reverse ? steps - 1 - step : step;
    const Eigen::Index prev = reverse ? t + 1 : t - 1;
    const bool first = step == 0;
    const auto& i = cache.i.col(t);
    const auto& f = cache.f.col(t);
    const auto& g = cache.g.col(t);
    const auto& o = cache.o.col(t);
    const VectorXd c_prev = first ? zero : VectorXd(cache.c.col(prev));
    if (!first) h_prev.col(t) = cache.h.col(prev);

    const VectorXd tanh_c = cache.c.col(t).array().tanh().matrix();
    const VectorXd dh = dh_out.col(t) + dh_next;
    const VectorXd d_o = dh.cwiseProduct(tanh_c);
    const VectorXd dc =
        dc_next + dh.cwiseProduct(o).cwiseProduct((1.0 - tanh_c.array().square()).matrix());
    const VectorXd d_i = dc.cwiseProduct(g);
    const VectorXd d_g = dc.cwiseProduct(i);
    const VectorXd d_f = dc.cwiseProduct(c_prev);
    dc_next = dc.cwiseProduct(f);

    dz.col(t).segment(0, hidden) = d_i.array() * i.array() * (1.0 - i.array());
    dz.col(t).segment(hidden, hidden) = d_f.array() * f.array() * (1.0 - f.array());
    dz.col(t).segment(2 * hidden, hidden) = d_g.array() * (1.0 - g.array().square());
    dz.col(t).segment(3 * hidden, hidden) = d_o.array() * o.array() * (1.0 - o.array());
    dh_next.noalias() = p.u.transpose() * dz.col(t);
  }
  grad.w.noalias() += dz * x.transpose();
  grad.u.noalias() += dz * h_prev.transpose();
  grad.b += dz.rowwise().sum();
  dx.noalias() += p.w.transpose() * dz;
}

void backward_accumulate(const SyntaxModel& model, const UposSequence& seq, Label gold,
                         const ForwardPass& pass, Parameters& grad) {
  const auto& p = model.params;
  const int hidden = model.config.hidden;
  const double y = gold == Label::kMachine ? 1.0 : 0.0;
  const double dlogit = pass.p_machine - y;

  grad.head += dlogit * pass.context;
  grad.head_bias(0, 0) += dlogit;
  const VectorXd dctx = dlogit * p.head.col(0);

  const MatrixXd& states = pass.layers.back().output;
  const VectorXd& alpha = pass.attention;
  const VectorXd dalpha = states.transpose() * dctx;
  const VectorXd de = alpha.cwiseProduct((dalpha.array() - alpha.dot(dalpha)).matrix());
  grad.attention.col(0) += states * de;
  MatrixXd ds = dctx * alpha.transpose() + p.attention.col(0) * de.transpose();

  for (int l = model.config.layers - 1; l >= 0; --l) {
    const auto& cache = pass.layers[static_cast<std::size_t>(l)];
    const auto& layer = p.layers[static_cast<std::size_t>(l)];
    auto& glayer = grad.layers[static_cast<std::size_t>(l)];
    MatrixXd dx = MatrixXd::Zero(cache.input.rows(), cache.input.cols());
    backprop_direction(layer.fwd, cache.input, cache.fwd, ds.topRows(hidden), false, hidden,
                       glayer.fwd, dx);
    backprop_direction(layer.bwd, cache.input, cache.bwd, ds.bottomRows(hidden), true, hidden,
                       glayer.bwd, dx);
    ds = std::move(dx);
  }
  for (std::size_t t = 0; t < seq.tags.size(); ++t) {
    grad.embedding.row(seq.tags[t]) += ds.col(static_cast<Eigen::Index>(t)).transpose();
  }
}

[[noreturn]] void bad_checkpoint(const std::string& why) {
  throw Error(ErrorCode::kBadCheckpoint, "syntax checkpoint: " + why);
}

std::optional<Label> parse_label(const json& row, std::size_t line) {
  auto it = row.find("label");
  if (it == row.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) throw MalformedRecordError(line, "label must be 0 or 1");
  auto label = label_from_int(it->get<std::int64_t>());
  if (!label) throw MalformedRecordError(line, "label must be 0 or 1");
  return label;
}

}  // namespace

// --- UPOS -------------------------------------------------------------------

std::optional<std::uint8_t> upos_id(std::string_view name) {
  for (std::size_t i = 0; i < kUposTags.size(); ++i) {
    if (kUposTags[i] == name) return static_cast<std::uint8_t>(i);
  }
  return std::nullopt;
}

std::string_view upos_name(std::uint8_t id) {
  return id < kUposTags.size() ? kUposTags[id] : std::string_view("UNK");
}

UposSequence upos_encode(std::span<const std::string> names, std::size_t max_length,
                         std::string doc_id) {
  if (names.empty()) throw Error(ErrorCode::kEmptySequence, "no tags for '" + doc_id + "'");
  UposSequence seq;
  seq.doc_id = std::move(doc_id);
  seq.original_length = names.size();
  const std::size_t keep = std::min(names.size(), std::max<std::size_t>(max_length, 1));
  seq.tags.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    if (auto id = upos_id(names[i])) {
      seq.tags.push_back(*id);
    } else {
      seq.tags.push_back(kUnkId);
      ++seq.unknown;
    }
  }
  return seq;
}

std::vector<std::string> upos_decode(const UposSequence& seq) {
  std::vector<std::string> out;
  out.reserve(seq.tags.size());
  for (const auto id : seq.tags) out.emplace_back(upos_name(id));
  return out;
}

// --- Parameters ---------------------------------------------------------------

Parameters Parameters::zeros(const ModelConfig& cfg) {
  if (cfg.embedding_dim < 1 || cfg.hidden < 1 || cfg.layers < 1) {
    throw Error(ErrorCode::kShapeMismatch, "model dimensions must be positive");
  }
  const int h = cfg.hidden;
  Parameters p;
  p.embedding = MatrixXd::Zero(kVocabSize, cfg.embedding_dim);
  for (int l = 0; l < cfg.layers; ++l) {
    const int in = l == 0 ? cfg.embedding_dim : 2 * h;
    LstmLayer layer;
    for (auto* dir : {&layer.fwd, &layer.bwd}) {
      dir->w = MatrixXd::Zero(4 * h, in);
      dir->u = MatrixXd::Zero(4 * h, h);
      dir->b = MatrixXd::Zero(4 * h, 1);
    }
    p.layers.push_back(std::move(layer));
  }
  p.attention = MatrixXd::Zero(2 * h, 1);
  p.head = MatrixXd::Zero(2 * h, 1);
  p.head_bias = MatrixXd::Zero(1, 1);
  return p;
}

void Parameters::visit(const std::function<void(const std::string&, MatrixXd&)>& f) {
  f("embedding", embedding);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string prefix = "layer" + std::to_string(l);
    f(prefix + ".fwd.w", layers[l].fwd.w);
    f(prefix + ".fwd.u", layers[l].fwd.u);
    f(prefix + ".fwd.b", layers[l].fwd.b);
    f(prefix + ".bwd.w", layers[l].bwd.w);
    f(prefix + ".bwd.u", layers[l].bwd.u);
    f(prefix + ".bwd.b", layers[l].bwd.b);
  }
  f("attention", attention);
  f("head", head);
  f("head_bias", head_bias);
}

void Parameters::visit(
    const std::function<void(const std::string&, const MatrixXd&)>& f) const {
  const_cast<Parameters*>(this)->visit(
      [&f](const std::string& name, MatrixXd& m) { f(name, m); });
}

double Parameters::squared_norm() const {
  double total = 0.0;
  visit([&total](const std::string&, const MatrixXd& m) { total += m.squaredNorm(); });
  return total;
}

bool Parameters::all_finite() const {
  bool ok = true;
  visit([&ok](const std::string&, const MatrixXd& m) { ok = ok && m.allFinite(); });
  return ok;
}

SyntaxModel SyntaxModel::zeros(const ModelConfig& cfg) {
  SyntaxModel model;
  model.config = cfg;
  model.params = Parameters::zeros(cfg);
  return model;
}

SyntaxModel SyntaxModel::initialize(const ModelConfig& cfg, std::uint64_t seed) {
  SyntaxModel model = zeros(cfg);
  model.seed = seed;
  Rng rng(seed);
  auto fill = [&rng](MatrixXd& m, double fan_in) {
    const double bound = 1.0 / std::sqrt(fan_in);
    // Row-major draw order so the result does not depend on Eigen's layout.
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-bound, bound);
    }
  };
  const int h = cfg.hidden;
  auto& p = model.params;
  fill(p.embedding, cfg.embedding_dim);
  for (auto& layer : p.layers) {
    for (auto* dir : {&layer.fwd, &layer.bwd}) {
      fill(dir->w, static_cast<double>(dir->w.cols()));
      fill(dir->u, h);
      fill(dir->b, h);
      dir->b.block(h, 0, h, 1).setOnes();
    }
  }
  fill(p.attention, 2 * h);
  fill(p.head, 2 * h);
  return model;
}

void SyntaxModel::check_shapes() const {
  Parameters expected = Parameters::zeros(config);
  std::vector<std::pair<Eigen::Index, Eigen::Index>> want;
  expected.visit([&want](const std::string&, const MatrixXd& m) {
    want.emplace_back(m.rows(), m.cols());
  });
  if (params.layers.size() != static_cast<std::size_t>(config.layers)) {
    throw Error(ErrorCode::kShapeMismatch, "layer count differs from config");
  }
  std::size_t k = 0;
  params.visit([&](const std::string& name, const MatrixXd& m) {
    if (m.rows() != want[k].first || m.cols() != want[k].second) {
      throw Error(ErrorCode::kShapeMismatch,
                  name + " is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                      ", config needs " + std::to_string(want[k].first) + "x" +
                      std::to_string(want[k].second));
    }
    ++k;
  });
}

// --- Forward / backward -------------------------------------------------------

ForwardPass forward(const SyntaxModel& model, const UposSequence& seq) {
  if (seq.tags.empty()) throw Error(ErrorCode::kEmptySequence, "empty sequence");
  model.check_shapes();
  const auto& cfg = model.config;
  const auto& p = model.params;
  const auto steps = static_cast<Eigen::Index>(seq.tags.size());

  ForwardPass pass;
  pass.layers.resize(static_cast<std::size_t>(cfg.layers));
  MatrixXd x(cfg.embedding_dim, steps);
  for (Eigen::Index t = 0; t < steps; ++t) {
    const auto id = seq.tags[static_cast<std::size_t>(t)];
    if (id >= kVocabSize) throw Error(ErrorCode::kShapeMismatch, "tag id out of range");
    x.col(t) = p.embedding.row(id).transpose();
  }
  for (int l = 0; l < cfg.layers; ++l) {
    auto& cache = pass.layers[static_cast<std::size_t>(l)];
    const auto& layer = p.layers[static_cast<std::size_t>(l)];
    cache.input = std::move(x);
    run_direction(layer.fwd, cache.input, false, cfg.hidden, cache.fwd);
    run_direction(layer.bwd, cache.input, true, cfg.hidden, cache.bwd);
    cache.output.resize(2 * cfg.hidden, steps);
    cache.output.topRows(cfg.hidden) = cache.fwd.h;
    cache.output.bottomRows(cfg.hidden) = cache.bwd.h;
    x = cache.output;
  }

  const MatrixXd& states = pass.layers.back().output;
  VectorXd scores = states.transpose() * p.attention.col(0);
  const double max_score = scores.maxCoeff();
  VectorXd weights = (scores.array() - max_score).exp().matrix();
  weights /= weights.sum();
  pass.attention = std::move(weights);
  pass.context = states * pass.attention;
  pass.logit = p.head.col(0).dot(pass.context) + p.head_bias(0, 0);
  pass.p_machine = sigmoid(pass.logit);
  return pass;
}

double loss(const ForwardPass& pass, Label gold) {
  const double y = gold == Label::kMachine ? 1.0 : 0.0;
  return softplus(pass.logit) - y * pass.logit;
}

Parameters backward(const SyntaxModel& model, const UposSequence& seq, Label gold,
                    const ForwardPass& pass) {
  model.check_shapes();
  if (pass.layers.size() != static_cast<std::size_t>(model.config.layers) ||
      pass.attention.size() != static_cast<Eigen::Index>(seq.tags.size())) {
    throw Error(ErrorCode::kShapeMismatch, "forward caches do not match the sequence");
  }
  Parameters grad = Parameters::zeros(model.config);
  backward_accumulate(model, seq, gold, pass, grad);
  return grad;
}

GradientCheck gradient_check(const SyntaxModel& model, const UposSequence& seq, Label gold,
                             double epsilon) {
  const Parameters analytic = backward(model, seq, gold, forward(model, seq));
  std::vector<const MatrixXd*> grads;
  analytic.visit([&grads](const std::string&, const MatrixXd& m) { grads.push_back(&m); });

  SyntaxModel probe = model;
  GradientCheck result;
  std::size_t k = 0;
  probe.params.visit([&](const std::string& name, MatrixXd& m) {
    BlockCheck block{name, static_cast<std::size_t>(m.size()), 0.0};
    for (Eigen::Index idx = 0; idx < m.size(); ++idx) {
      const double saved = m.data()[idx];
      m.data()[idx] = saved + epsilon;
      const double up = loss(forward(probe, seq), gold);
      m.data()[idx] = saved - epsilon;
      const double down = loss(forward(probe, seq), gold);
      m.data()[idx] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = grads[k]->data()[idx];
      const double err = std::abs(a - numeric) / (std::abs(a) + std::abs(numeric) + 1e-12);
      block.max_relative_error = std::max(block.max_relative_error, err);
    }
    result.max_relative_error = std::max(result.max_relative_error, block.max_relative_error);
    result.blocks.push_back(std::move(block));
    ++k;
  });
  return result;
}

// --- Training -----------------------------------------------------------------

EvalStats evaluate(const SyntaxModel& model, std::span<const LabeledSequence> data) {
  EvalStats stats;
  if (data.empty()) return stats;
  std::size_t correct = 0;
  for (const auto& ex : data) {
    const auto pass = forward(model, ex.sequence);
    stats.loss += loss(pass, ex.label);
    const Label predicted = pass.p_machine > 0.5 ? Label::kMachine : Label::kHuman;
    if (predicted == ex.label) ++correct;
  }
  const auto n = static_cast<double>(data.size());
  stats.loss /= n;
  stats.accuracy = static_cast<double>(correct) / n;
  return stats;
}

TrainResult train(SyntaxModel init, std::span<const LabeledSequence> train_data,
                  std::span<const LabeledSequence> validation, const TrainConfig& cfg,
                  const std::function<void(const EpochStats&)>& on_epoch) {
  init.check_shapes();
  if (cfg.batch_size == 0 || cfg.epochs < 0 || !std::isfinite(cfg.learning_rate) ||
      !(cfg.clip_norm > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bad syntax training configuration");
  }
  const auto count = [&](Label l) {
    return std::count_if(train_data.begin(), train_data.end(),
                         [l](const auto& ex) { return ex.label == l; });
  };
  if (count(Label::kHuman) == 0 || count(Label::kMachine) == 0) {
    throw Error(ErrorCode::kDegenerateTraining,
                "training data needs both labels (" + std::to_string(train_data.size()) +
                    " sequences)");
  }

  TrainResult result{std::move(init), {}};
  SyntaxModel& model = result.model;
  auto params = block_pointers(model.params);
  Parameters grad = Parameters::zeros(model.config);
  auto grads = block_pointers(grad);

  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(cfg.seed);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      for (auto* g : grads) g->setZero();
      for (std::size_t k = begin; k < end; ++k) {
        const auto& ex = train_data[order[k]];
        const auto pass = forward(model, ex.sequence);
        const double l = loss(pass, ex.label);
        if (!std::isfinite(l)) {
          throw Error(ErrorCode::kNonFiniteLoss,
                      "loss became non-finite in epoch " + std::to_string(epoch) +
                          " with learning rate " + std::to_string(cfg.learning_rate));
        }
        loss_sum += l;
        if ((pass.p_machine > 0.5) == (ex.label == Label::kMachine)) ++correct;
        backward_accumulate(model, ex.sequence, ex.label, pass, grad);
      }
      double scale = 1.0 / static_cast<double>(end - begin);
      const double norm = std::sqrt(grad.squared_norm()) * scale;
      if (norm > cfg.clip_norm) scale *= cfg.clip_norm / norm;
      for (std::size_t b = 0; b < params.size(); ++b) {
        *params[b] -= (cfg.learning_rate * scale) * *grads[b];
      }
    }
    if (!model.params.all_finite()) {
      throw Error(ErrorCode::kNonFiniteLoss,
                  "parameters became non-finite in epoch " + std::to_string(epoch));
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(order.size());
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    if (!validation.empty()) {
      const auto v = evaluate(model, validation);
      stats.validation_loss = v.loss;
      stats.validation_accuracy = v.accuracy;
    }
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
    if (cfg.target_accuracy && stats.validation_accuracy &&
        *stats.validation_accuracy >= *cfg.target_accuracy) {
      break;
    }
  }
  return result;
}

// --- Checkpoints ----------------------------------------------------------------

json to_json(const SyntaxModel& model) {
  json blocks = json::array();
  model.params.visit([&blocks](const std::string& name, const MatrixXd& m) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    }
    blocks.push_back({{"name", name}, {"shape", {m.rows(), m.cols()}}, {"data", data}});
  });
  return {{"format", kFormat},
          {"version", SyntaxModel::kVersion},
          {"config",
           {{"vocab", kVocabSize},
            {"embedding_dim", model.config.embedding_dim},
            {"hidden", model.config.hidden},
            {"layers", model.config.layers}}},
          {"seed", model.seed},
          {"upos", kUposTags},
          {"blocks", std::move(blocks)}};
}

SyntaxModel model_from_json(const json& j) {
  if (!j.is_object() || j.value("format", "") != kFormat) {
    bad_checkpoint("format is not " + std::string(kFormat));
  }
  if (j.value("version", 0) != SyntaxModel::kVersion) bad_checkpoint("unsupported version");
  SyntaxModel model;
  try {
    const auto& cfg = j.at("config");
    if (cfg.value("vocab", kVocabSize) != kVocabSize) {
      throw Error(ErrorCode::kShapeMismatch, "vocabulary size differs");
    }
    model.config.embedding_dim = cfg.at("embedding_dim").get<int>();
    model.config.hidden = cfg.at("hidden").get<int>();
    model.config.layers = cfg.at("layers").get<int>();
    model.seed = j.value("seed", std::uint64_t{0});
    model.params = Parameters::zeros(model.config);

    std::map<std::string, const json*> by_name;
    for (const auto& block : j.at("blocks")) {
      by_name[block.at("name").get<std::string>()] = &block;
    }
    model.params.visit([&by_name](const std::string& name, MatrixXd& m) {
      auto it = by_name.find(name);
      if (it == by_name.end()) throw Error(ErrorCode::kShapeMismatch, "missing block " + name);
      const auto& block = *it->second;
      const auto shape = block.at("shape").get<std::vector<Eigen::Index>>();
      const auto data = block.at("data").get<std::vector<double>>();
      if (shape.size() != 2 || shape[0] != m.rows() || shape[1] != m.cols() ||
          data.size() != static_cast<std::size_t>(m.size())) {
        throw Error(ErrorCode::kShapeMismatch, "block " + name + " has the wrong shape");
      }
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = data[k++];
      }
    });
  } catch (const json::exception& e) {
    bad_checkpoint(e.what());
  }
  if (!model.params.all_finite()) bad_checkpoint("non-finite parameters");
  return model;
}

void save_model(const SyntaxModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << to_json(model).dump() << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

SyntaxModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, path.string());
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) bad_checkpoint("not valid JSON: " + path.string());
  return model_from_json(j);
}

// --- Tag sources ------------------------------------------------------------------

TaggedCorpus load_tagged(const std::filesystem::path& path, bool strict,
                         std::size_t max_length) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, path.string());
  const std::string origin = path.filename().string();
  TaggedCorpus out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      json row = json::parse(line, nullptr, /*allow_exceptions=*/false);
      if (row.is_discarded() || !row.is_object()) {
        throw MalformedRecordError(line_no, "not a JSON object");
      }
      std::string id = origin + "#" + std::to_string(line_no);
      if (auto it = row.find("id"); it != row.end() && it->is_string()) {
        id = it->get<std::string>();
      }
      auto tags = row.find("tags");
      if (tags == row.end() || !tags->is_array()) {
        if (strict) {
          throw Error(ErrorCode::kMissingTags, id + " (line " + std::to_string(line_no) + ")");
        }
        out.skipped.push_back({line_no, ErrorCode::kMissingTags, "no tags for " + id});
        continue;
      }
      std::vector<std::string> names;
      for (const auto& t : *tags) {
        if (!t.is_string()) throw MalformedRecordError(line_no, "tags must be strings");
        names.push_back(t.get<std::string>());
      }
      if (names.empty()) throw MalformedRecordError(line_no, "empty tag sequence");
      TaggedDoc doc{upos_encode(names, max_length, id), parse_label(row, line_no)};
      out.docs.push_back(std::move(doc));
    } catch (const MalformedRecordError& e) {
      if (strict) throw;
      out.skipped.push_back({line_no, ErrorCode::kMalformedRecord, e.reason()});
    }
  }
  return out;
}

ExternalTagger::ExternalTagger(std::unique_ptr<protocol::LineChannel> channel,
                               protocol::Timeout timeout)
    : client_(std::move(channel), timeout) {
  client_.handshake(protocol::kTaggerToken);
}

TaggedCorpus ExternalTagger::tag(std::span<const Document> docs, std::size_t max_length) {
  std::vector<json> requests;
  requests.reserve(docs.size());
  for (const auto& doc : docs) requests.push_back({{"text", doc.text}});
  const auto replies = client_.call(std::move(requests));

  TaggedCorpus out;
  for (std::size_t i = 0; i < replies.size(); ++i) {
    const auto& reply = replies[i];
    const auto& doc = docs[i];
    if (auto err = reply.find("error"); err != reply.end()) {
      out.skipped.push_back({i + 1, ErrorCode::kScorerProtocolError,
                             "tagger failed on " + doc.id + ": " +
                                 (err->is_string() ? err->get<std::string>() : err->dump())});
      continue;
    }
    auto tags = reply.find("tags");
    if (tags == reply.end() || !tags->is_array()) {
      throw Error(ErrorCode::kScorerProtocolError, "tagger reply without tags array");
    }
    std::vector<std::string> names;
    for (const auto& t : *tags) {
      if (!t.is_string()) throw Error(ErrorCode::kScorerProtocolError, "non-string tag");
      names.push_back(t.get<std::string>());
    }
    if (names.empty()) {
      out.skipped.push_back({i + 1, ErrorCode::kEmptySequence, "no tags for " + doc.id});
      continue;
    }
    out.docs.push_back({upos_encode(names, max_length, doc.id), doc.label});
  }
  return out;
}

std::unique_ptr<ExternalTagger> connect_external_tagger(std::string_view selector,
                                                        protocol::Timeout timeout) {
  const auto endpoint = protocol::parse_endpoint(selector);
  return std::make_unique<ExternalTagger>(protocol::open_endpoint(endpoint, timeout), timeout);
}

}  // namespace segvote::syntax
