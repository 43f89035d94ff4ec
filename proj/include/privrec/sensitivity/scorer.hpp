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
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "privrec/catalog.hpp"
#include "privrec/error.hpp"
#include "privrec/http.hpp"
#include "privrec/sensitivity/classifier.hpp"

namespace privrec::sensitivity {

// Decision threshold for inference-time scorers.
inline constexpr double kDefaultThreshold = 0.5;
// Recall-priority preset used when training the classifier.
inline constexpr double kRecallPriorityThreshold = 0.3;

inline const std::vector<std::string>& default_sensitive_categories() {
  static const std::vector<std::string> kCategories = {
      "Health & Personal Care", "Health & Household", "Beauty & Personal Care"};
  return kCategories;
}

struct SensitivityVerdict {
  std::string product_id;
  double probability = 0.0;
  bool is_sensitive = false;

  friend bool operator==(const SensitivityVerdict&, const SensitivityVerdict&) = default;
};

inline SensitivityVerdict make_verdict(std::string product_id, double probability,
                                       double threshold) {
  return {std::move(product_id), probability, probability > threshold};
}

enum class ScorerKind { kCategorical, kTrained, kRemote };

inline std::string_view to_string(ScorerKind k) {
  switch (k) {
    case ScorerKind::kCategorical: return "categorical";
    case ScorerKind::kTrained: return "trained";
    case ScorerKind::kRemote: return "remote";
  }
  return "unknown";
}

struct ScorerConfig {
  ScorerKind kind = ScorerKind::kCategorical;
  double threshold = kDefaultThreshold;
  std::vector<std::string> sensitive_categories = default_sensitive_categories();
  std::string endpoint;                // remote
  std::filesystem::path model_path;    // trained
  double timeout_seconds = 30.0;       // remote

  void validate() const {
    if (!(threshold > 0.0 && threshold < 1.0)) {
      throw Error(ErrorKind::kConfig, "scorer threshold must lie strictly in (0,1)");
    }
    if (kind == ScorerKind::kRemote && endpoint.empty()) {
      throw Error(ErrorKind::kConfig, "remote scorer needs an endpoint");
    }
    if (kind == ScorerKind::kTrained && model_path.empty()) {
      throw Error(ErrorKind::kConfig, "trained scorer needs a model_path");
    }
  }
};

inline ScorerConfig scorer_config_from_json(const nlohmann::json& j) {
  ScorerConfig c;
  const auto kind = j.value("kind", std::string("categorical"));
  if (kind == "categorical") c.kind = ScorerKind::kCategorical;
  else if (kind == "trained") c.kind = ScorerKind::kTrained;
  else if (kind == "remote") c.kind = ScorerKind::kRemote;
  else throw Error(ErrorKind::kConfig, "unknown scorer kind '" + kind + "'");
  c.threshold = j.value("threshold", kDefaultThreshold);
  if (j.contains("sensitive_categories")) {
    c.sensitive_categories = j["sensitive_categories"].get<std::vector<std::string>>();
  }
  c.endpoint = j.value("endpoint", std::string());
  c.model_path = j.value("model_path", std::string());
  c.timeout_seconds = j.value("timeout_seconds", 30.0);
  c.validate();
  return c;
}

inline nlohmann::json to_json(const ScorerConfig& c) {
  nlohmann::json j;
  j["kind"] = to_string(c.kind);
  j["threshold"] = c.threshold;
  if (c.kind == ScorerKind::kCategorical) j["sensitive_categories"] = c.sensitive_categories;
  if (c.kind == ScorerKind::kRemote) j["endpoint"] = c.endpoint;
  if (c.kind == ScorerKind::kTrained) j["model_path"] = c.model_path.string();
  return j;
}

// Scoring is reentrant; implementations are immutable after construction.
class SensitivityScorer {
 public:
  virtual ~SensitivityScorer() = default;

  virtual double threshold() const = 0;
  virtual std::string identity() const = 0;
  // Probability of "sensitive" for each product, order-preserving.
  virtual std::vector<double> probabilities(std::span<const Product> products) const = 0;

  SensitivityVerdict score(const Product& p) const {
    return make_verdict(p.id, probabilities(std::span(&p, 1)).front(), threshold());
  }

  std::vector<SensitivityVerdict> score_all(std::span<const Product> products) const {
    if (products.empty()) return {};
    const auto probs = probabilities(products);
    if (probs.size() != products.size()) {
      throw Error(ErrorKind::kProtocol, "scorer returned wrong number of probabilities");
    }
    std::vector<SensitivityVerdict> out;
    out.reserve(products.size());
    for (std::size_t i = 0; i < products.size(); ++i) {
      out.push_back(make_verdict(products[i].id, probs[i], threshold()));
    }
    return out;
  }
};

// Probability 1 for products in a predefined sensitive category, else 0.
class CategoricalScorer final : public SensitivityScorer {
 public:
  explicit CategoricalScorer(std::vector<std::string> sensitive_categories,
                             double threshold = kDefaultThreshold)
      : categories_(std::move(sensitive_categories)), threshold_(threshold) {}

  double threshold() const override { return threshold_; }
  std::string identity() const override { return "categorical"; }

  std::vector<double> probabilities(std::span<const Product> products) const override {
    std::vector<double> out;
    out.reserve(products.size());
    for (const auto& p : products) {
      const bool hit = std::find(categories_.begin(), categories_.end(), p.main_category) !=
                       categories_.end();
      out.push_back(hit ? 1.0 : 0.0);
    }
    return out;
  }

 private:
  std::vector<std::string> categories_;
  double threshold_;
};

// Sigmoid of the trained bag-of-tokens model over canonical text.
class TrainedScorer final : public SensitivityScorer {
 public:
  TrainedScorer(std::shared_ptr<const TrainedClassifier> classifier, double threshold)
      : classifier_(std::move(classifier)), threshold_(threshold) {}

  double threshold() const override { return threshold_; }
  std::string identity() const override {
    return "trained(vocab=" + std::to_string(classifier_->vocabulary().size()) + ")";
  }

  std::vector<double> probabilities(std::span<const Product> products) const override {
    std::vector<double> out;
    out.reserve(products.size());
    for (const auto& p : products) out.push_back(classifier_->probability(canonical_text(p).text));
    return out;
  }

 private:
  std::shared_ptr<const TrainedClassifier> classifier_;
  double threshold_;
};

// Client for POST {endpoint}/score {"texts": [...]} -> {"probabilities": [...]}.
// Each call uses its own connection, so concurrent calls are independent.
class RemoteScorer final : public SensitivityScorer {
 public:
  RemoteScorer(std::string endpoint, double threshold, double timeout_seconds = 30.0)
      : endpoint_(std::move(endpoint)), threshold_(threshold), timeout_(timeout_seconds) {}

  double threshold() const override { return threshold_; }
  std::string identity() const override { return "remote(" + endpoint_ + ")"; }

  std::vector<double> probabilities(std::span<const Product> products) const override {
    nlohmann::json body;
    body["texts"] = nlohmann::json::array();
    for (const auto& p : products) body["texts"].push_back(canonical_text(p).text);
    return request(body);
  }

  std::vector<double> score_texts(std::span<const std::string> texts) const {
    nlohmann::json body;
    body["texts"] = texts;
    return request(body);
  }

 private:
  std::vector<double> request(const nlohmann::json& body) const {
    http::Options options;
    options.timeout_seconds = timeout_;
    const auto response = http::post_json(endpoint_, "/score", body, options);
    const auto it = response.find("probabilities");
    if (it == response.end() || !it->is_array() || it->size() != body["texts"].size()) {
      throw Error(ErrorKind::kProtocol, "/score response lacks an aligned probabilities array");
    }
    std::vector<double> out;
    out.reserve(it->size());
    for (const auto& v : *it) {
      if (!v.is_number()) throw Error(ErrorKind::kProtocol, "/score probability is not a number");
      const double p = v.get<double>();
      if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(ErrorKind::kProtocol, "/score probability outside [0,1]");
      }
      out.push_back(p);
    }
    return out;
  }

  std::string endpoint_;
  double threshold_;
  double timeout_;
};

inline std::unique_ptr<SensitivityScorer> make_scorer(const ScorerConfig& config) {
  config.validate();
  switch (config.kind) {
    case ScorerKind::kCategorical:
      return std::make_unique<CategoricalScorer>(config.sensitive_categories, config.threshold);
    case ScorerKind::kTrained:
      return std::make_unique<TrainedScorer>(
          std::make_shared<const TrainedClassifier>(load_classifier(config.model_path)),
          config.threshold);
    case ScorerKind::kRemote:
      return std::make_unique<RemoteScorer>(config.endpoint, config.threshold,
                                            config.timeout_seconds);
  }
  throw Error(ErrorKind::kConfig, "unknown scorer kind");
}

struct HistorySplit {
  std::vector<Product> sensitive;     // P_s, original relative order
  std::vector<Product> nonsensitive;  // P_ns, original relative order
  std::vector<SensitivityVerdict> verdicts;  // aligned with the history items
};

// Order-preserving partition of the history by the scorer's verdicts.
inline HistorySplit split_history(const PurchaseHistory& h, const SensitivityScorer& scorer) {
  HistorySplit split;
  split.verdicts = scorer.score_all(h.items);
  for (std::size_t i = 0; i < h.items.size(); ++i) {
    (split.verdicts[i].is_sensitive ? split.sensitive : split.nonsensitive).push_back(h.items[i]);
  }
  return split;
}

}  // namespace privrec::sensitivity
