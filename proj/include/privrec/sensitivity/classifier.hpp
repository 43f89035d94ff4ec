// Copyright 2026 The privrec Authors
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

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "privrec/binary_io.hpp"
#include "privrec/catalog.hpp"
#include "privrec/error.hpp"
#include "privrec/sensitivity/focal_loss.hpp"

namespace privrec::sensitivity {

// Truncation length for classifier inputs, in tokens.
inline constexpr std::size_t kMaxTokens = 256;

// Lowercased alphanumeric runs, at most `max_tokens` of them.
inline std::vector<std::string> tokenize(std::string_view text,
                                         std::size_t max_tokens = kMaxTokens) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  };
  for (char c : text) {
    if (tokens.size() >= max_tokens) break;
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      current.push_back(static_cast<char>(std::tolower(uc)));
    } else {
      flush();
    }
  }
  if (tokens.size() < max_tokens) flush();
  return tokens;
}

struct LabeledText {
  ProductText text;
  bool sensitive = false;
};

struct ClassifierMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double loss = 0.0;
};

// Metrics with "sensitive" as the positive class; zero denominators give 0.
inline ClassifierMetrics confusion_metrics(std::size_t tp, std::size_t fp,
                                           std::size_t fn, std::size_t tn) {
  ClassifierMetrics m;
  const double total = static_cast<double>(tp + fp + fn + tn);
  m.accuracy = total > 0 ? static_cast<double>(tp + tn) / total : 0.0;
  m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = (m.precision + m.recall) > 0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

// Sparse binary bag-of-tokens example.
struct SparseExample {
  std::vector<uint32_t> features;  // sorted, unique
  bool label = false;
};

// Logistic model over token-presence features.
struct LogisticModel {
  std::vector<double> weights;
  double bias = 0.0;

  double logit(std::span<const uint32_t> features) const {
    double z = bias;
    for (uint32_t f : features) z += weights[f];
    return z;
  }
  double probability(std::span<const uint32_t> features) const {
    return sigmoid(logit(features));
  }
};

// Sum of per-sample focal losses over `examples`.
inline double model_focal_loss(const LogisticModel& model,
                               std::span<const SparseExample> examples,
                               const FocalLossParams& params) {
  std::vector<double> probs;
  std::vector<double> weights;
  probs.reserve(examples.size());
  weights.reserve(examples.size());
  for (const auto& ex : examples) {
    const double p = model.probability(ex.features);
    probs.push_back(ex.label ? p : 1.0 - p);
    weights.push_back(params.class_weights.for_label(ex.label));
  }
  return focal_loss(probs, weights, params.gamma);
}

struct ModelGradient {
  std::vector<double> weights;
  double bias = 0.0;
};

// Analytic gradient of model_focal_loss with respect to weights and bias.
inline ModelGradient model_focal_gradient(const LogisticModel& model,
                                          std::span<const SparseExample> examples,
                                          const FocalLossParams& params) {
  ModelGradient g;
  g.weights.assign(model.weights.size(), 0.0);
  for (const auto& ex : examples) {
    const double d = focal_loss_dlogit(model.probability(ex.features), ex.label,
                                       params.class_weights.for_label(ex.label),
                                       params.gamma);
    for (uint32_t f : ex.features) g.weights[f] += d;
    g.bias += d;
  }
  return g;
}

struct TrainingMetadata {
  uint32_t epochs = 0;
  double learning_rate = 0.0;
  uint64_t seed = 0;
  double best_f1 = 0.0;
  uint32_t best_epoch = 0;  // 1-based
};

class TrainedClassifier {
 public:
  TrainedClassifier() = default;
  TrainedClassifier(std::vector<std::string> tokens, LogisticModel model,
                    double threshold, TrainingMetadata metadata = {})
      : tokens_(std::move(tokens)),
        model_(std::move(model)),
        threshold_(threshold),
        metadata_(metadata) {
    if (tokens_.size() != model_.weights.size()) {
      throw Error(ErrorKind::kShape, "vocabulary and weight sizes differ");
    }
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      index_.emplace(tokens_[i], static_cast<uint32_t>(i));
    }
  }

  // Sorted, unique in-vocabulary feature indices of `text`.
  std::vector<uint32_t> features(std::string_view text) const {
    std::vector<uint32_t> out;
    for (const auto& tok : tokenize(text)) {
      if (auto it = index_.find(tok); it != index_.end()) out.push_back(it->second);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  double probability(std::string_view text) const {
    return model_.probability(features(text));
  }

  const std::vector<std::string>& vocabulary() const { return tokens_; }
  const LogisticModel& model() const { return model_; }
  double threshold() const { return threshold_; }
  void set_threshold(double t) { threshold_ = t; }
  const TrainingMetadata& metadata() const { return metadata_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, uint32_t> index_;
  LogisticModel model_;
  double threshold_ = 0.5;
  TrainingMetadata metadata_;
};

inline ClassifierMetrics evaluate_classifier(
    const TrainedClassifier& c, std::span<const LabeledText> labeled,
    double threshold, const FocalLossParams& loss_params = {}) {
  if (labeled.empty()) throw Error(ErrorKind::kShape, "evaluate_classifier: empty set");
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::vector<double> probs, weights;
  for (const auto& ex : labeled) {
    const double p = c.probability(ex.text.text);
    const bool predicted = p > threshold;
    if (predicted && ex.sensitive) ++tp;
    else if (predicted) ++fp;
    else if (ex.sensitive) ++fn;
    else ++tn;
    probs.push_back(ex.sensitive ? p : 1.0 - p);
    weights.push_back(loss_params.class_weights.for_label(ex.sensitive));
  }
  ClassifierMetrics m = confusion_metrics(tp, fp, fn, tn);
  m.loss = focal_loss(probs, weights, loss_params.gamma) /
           static_cast<double>(labeled.size());
  return m;
}

// ---------------------------------------------------------------------------
// Training

struct TrainingHyperparameters {
  double learning_rate = 2e-5;
  uint32_t epochs = 5;
  uint32_t batch_size = 16;
  double weight_decay = 0.01;
  uint64_t seed = 0;
};

struct SplitFractions {
  double train = 0.7;
  double validation = 0.2;
  double test = 0.1;
  bool stratified = true;
};

struct TrainerOptions {
  double gamma = 2.0;
  // Computed from the training split when absent.
  std::optional<ClassWeights> class_weights;
  double threshold = 0.3;
  TrainingHyperparameters hyper;
  SplitFractions split;
};

struct DataSplit {
  std::vector<std::size_t> train, validation, test;  // indices into input
};

// Seeded shuffle within each class, then per-class proportional cut.
inline DataSplit split_dataset(std::span<const LabeledText> labeled,
                               const SplitFractions& fractions, uint64_t seed) {
  const double sum = fractions.train + fractions.validation + fractions.test;
  if (std::abs(sum - 1.0) > 1e-9 || fractions.train <= 0 ||
      fractions.validation < 0 || fractions.test < 0) {
    throw Error(ErrorKind::kConfig, "split fractions must be nonnegative and sum to 1");
  }
  std::mt19937_64 rng(seed);
  DataSplit split;
  auto cut = [&](std::vector<std::size_t> idx) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n = static_cast<double>(idx.size());
    auto n_train = static_cast<std::size_t>(std::llround(n * fractions.train));
    auto n_val = static_cast<std::size_t>(std::llround(n * fractions.validation));
    n_train = std::min(n_train, idx.size());
    n_val = std::min(n_val, idx.size() - n_train);
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + n_train);
    split.validation.insert(split.validation.end(), idx.begin() + n_train,
                            idx.begin() + n_train + n_val);
    split.test.insert(split.test.end(), idx.begin() + n_train + n_val, idx.end());
  };
  if (fractions.stratified) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labeled.size(); ++i) {
      (labeled[i].sensitive ? pos : neg).push_back(i);
    }
    cut(std::move(neg));
    cut(std::move(pos));
  } else {
    std::vector<std::size_t> all(labeled.size());
    std::iota(all.begin(), all.end(), 0);
    cut(std::move(all));
  }
  for (auto* part : {&split.train, &split.validation, &split.test}) {
    std::sort(part->begin(), part->end());
  }
  return split;
}

struct EpochLog {
  uint32_t epoch = 0;
  double train_loss = 0.0;
  ClassifierMetrics validation;
};

struct TrainingResult {
  TrainedClassifier classifier;
  DataSplit split;
  ClassWeights class_weights;
  std::vector<EpochLog> epochs;
  ClassifierMetrics validation;  // of the selected checkpoint
  ClassifierMetrics test;        // of the selected checkpoint; zeros if no test data
};

// Mini-batch AdamW on the focal loss of a logistic bag-of-tokens model. After
// every epoch the validation F1 at `options.threshold` is computed; the epoch
// with the highest F1 (earliest on ties) is returned.
inline TrainingResult train_classifier(std::span<const LabeledText> labeled,
                                       const TrainerOptions& options) {
  const auto& hyper = options.hyper;
  if (hyper.epochs == 0 || hyper.batch_size == 0 || !(hyper.learning_rate > 0)) {
    throw Error(ErrorKind::kConfig, "epochs, batch size and learning rate must be positive");
  }
  if (!(options.threshold > 0.0 && options.threshold < 1.0)) {
    throw Error(ErrorKind::kConfig, "threshold must lie in (0,1)");
  }
  const auto n_pos = static_cast<std::size_t>(
      std::count_if(labeled.begin(), labeled.end(), [](const auto& e) { return e.sensitive; }));
  if (n_pos == 0 || n_pos == labeled.size()) {
    throw Error(ErrorKind::kDegenerateClass, "training data must contain both classes");
  }

  TrainingResult result;
  result.split = split_dataset(labeled, options.split, hyper.seed);
  const auto& train_idx = result.split.train;

  // Vocabulary from the training split, lexicographic.
  std::vector<std::string> vocab;
  for (std::size_t i : train_idx) {
    for (auto& tok : tokenize(labeled[i].text.text)) vocab.push_back(std::move(tok));
  }
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  TrainedClassifier featurizer(vocab, LogisticModel{std::vector<double>(vocab.size(), 0.0), 0.0},
                               options.threshold);

  std::vector<SparseExample> train;
  train.reserve(train_idx.size());
  std::size_t train_pos = 0;
  for (std::size_t i : train_idx) {
    train.push_back({featurizer.features(labeled[i].text.text), labeled[i].sensitive});
    train_pos += labeled[i].sensitive ? 1 : 0;
  }
  FocalLossParams loss_params;
  loss_params.gamma = options.gamma;
  loss_params.class_weights = options.class_weights
                                  ? *options.class_weights
                                  : class_weights(train.size(), train.size() - train_pos, train_pos);
  loss_params.validate();
  result.class_weights = loss_params.class_weights;

  std::vector<LabeledText> validation;
  for (std::size_t i : result.split.validation) validation.push_back(labeled[i]);
  if (validation.empty()) {
    for (std::size_t i : train_idx) validation.push_back(labeled[i]);
  }

  LogisticModel model{std::vector<double>(vocab.size(), 0.0), 0.0};
  std::vector<double> m1(vocab.size(), 0.0), m2(vocab.size(), 0.0);
  double mb1 = 0.0, mb2 = 0.0;
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;
  uint64_t step = 0;

  std::mt19937_64 rng(hyper.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  LogisticModel best_model = model;
  double best_f1 = -1.0;
  uint32_t best_epoch = 0;

  for (uint32_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      const std::size_t end = std::min(order.size(), start + hyper.batch_size);
      std::vector<SparseExample> batch;
      batch.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) batch.push_back(train[order[k]]);
      const double scale = 1.0 / static_cast<double>(batch.size());
      epoch_loss += model_focal_loss(model, batch, loss_params);
      ModelGradient g = model_focal_gradient(model, batch, loss_params);

      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t j = 0; j < model.weights.size(); ++j) {
        const double gj = g.weights[j] * scale;
        m1[j] = kBeta1 * m1[j] + (1 - kBeta1) * gj;
        m2[j] = kBeta2 * m2[j] + (1 - kBeta2) * gj * gj;
        model.weights[j] -= hyper.learning_rate *
                            ((m1[j] / c1) / (std::sqrt(m2[j] / c2) + kAdamEps) +
                             hyper.weight_decay * model.weights[j]);
      }
      const double gb = g.bias * scale;
      mb1 = kBeta1 * mb1 + (1 - kBeta1) * gb;
      mb2 = kBeta2 * mb2 + (1 - kBeta2) * gb * gb;
      model.bias -= hyper.learning_rate * (mb1 / c1) / (std::sqrt(mb2 / c2) + kAdamEps);
    }

    TrainedClassifier checkpoint(vocab, model, options.threshold);
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = epoch_loss / static_cast<double>(train.size());
    log.validation = evaluate_classifier(checkpoint, validation, options.threshold, loss_params);
    result.epochs.push_back(log);
    if (log.validation.f1 > best_f1) {
      best_f1 = log.validation.f1;
      best_model = model;
      best_epoch = epoch;
    }
  }

  TrainingMetadata meta{hyper.epochs, hyper.learning_rate, hyper.seed, best_f1, best_epoch};
  result.classifier = TrainedClassifier(vocab, best_model, options.threshold, meta);
  result.validation = result.epochs[best_epoch - 1].validation;
  if (!result.split.test.empty()) {
    std::vector<LabeledText> test;
    for (std::size_t i : result.split.test) test.push_back(labeled[i]);
    result.test = evaluate_classifier(result.classifier, test, options.threshold, loss_params);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Model file
//
// Little-endian flat layout:
//   magic "PRSC" | u32 version | f64 threshold | u64 vocab count
//   | vocab count x (u32 token length, token bytes, f64 weight) | f64 bias
//   | u32 epochs | f64 learning rate | u64 seed | f64 best f1 | u32 best epoch

inline constexpr char kModelMagic[4] = {'P', 'R', 'S', 'C'};
inline constexpr uint32_t kModelVersion = 1;

inline void save_classifier(const TrainedClassifier& c, std::ostream& out) {
  out.write(kModelMagic, 4);
  binary::put<uint32_t>(out, kModelVersion);
  binary::put<double>(out, c.threshold());
  binary::put<uint64_t>(out, c.vocabulary().size());
  for (std::size_t i = 0; i < c.vocabulary().size(); ++i) {
    const auto& tok = c.vocabulary()[i];
    binary::put_string(out, tok);
    binary::put<double>(out, c.model().weights[i]);
  }
  binary::put<double>(out, c.model().bias);
  const auto& m = c.metadata();
  binary::put<uint32_t>(out, m.epochs);
  binary::put<double>(out, m.learning_rate);
  binary::put<uint64_t>(out, m.seed);
  binary::put<double>(out, m.best_f1);
  binary::put<uint32_t>(out, m.best_epoch);
}

inline TrainedClassifier load_classifier(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kModelMagic, 4) != 0) {
    throw Error(ErrorKind::kFormat, "not a classifier model file");
  }
  if (binary::get<uint32_t>(in) != kModelVersion) {
    throw Error(ErrorKind::kFormat, "unsupported classifier model version");
  }
  const double threshold = binary::get<double>(in);
  const auto count = binary::get<uint64_t>(in);
  std::vector<std::string> tokens;
  LogisticModel model;
  for (uint64_t i = 0; i < count; ++i) {
    tokens.push_back(binary::get_string(in));
    model.weights.push_back(binary::get<double>(in));
  }
  model.bias = binary::get<double>(in);
  TrainingMetadata meta;
  meta.epochs = binary::get<uint32_t>(in);
  meta.learning_rate = binary::get<double>(in);
  meta.seed = binary::get<uint64_t>(in);
  meta.best_f1 = binary::get<double>(in);
  meta.best_epoch = binary::get<uint32_t>(in);
  return TrainedClassifier(std::move(tokens), std::move(model), threshold, meta);
}

inline void save_classifier(const TrainedClassifier& c, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  save_classifier(c, out);
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

inline TrainedClassifier load_classifier(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return load_classifier(in);
}

}  // namespace privrec::sensitivity
