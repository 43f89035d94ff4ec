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

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "privrec/catalog.hpp"
#include "privrec/gateway/chat.hpp"
#include "privrec/pipeline/runner.hpp"
#include "privrec/retrieval/embedding.hpp"
#include "privrec/retrieval/vector_index.hpp"
#include "privrec/sensitivity/classifier.hpp"
#include "privrec/sensitivity/scorer.hpp"

namespace privrec::test {

inline std::filesystem::path fixture_dir() { return PRIVREC_FIXTURE_DIR; }

inline std::filesystem::path samples_dir() {
  return std::filesystem::path(PRIVREC_FIXTURE_DIR).parent_path().parent_path() / "samples";
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("privrec-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

// Local HTTP server on an ephemeral port, stopped on destruction.
class StubServer {
 public:
  StubServer() = default;
  ~StubServer() { stop(); }

  httplib::Server& server() { return server_; }

  void start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

inline const std::vector<std::string>& corpus_categories() {
  static const std::vector<std::string> kCategories = {
      "Amazon Fashion",         "Beauty & Personal Care", "Electronics",
      "Health & Household",     "Magazine Subscriptions", "Books",
      "Baby Products",          "Grocery & Gourmet Food", "Health & Personal Care",
      "Musical Instruments"};
  return kCategories;
}

inline bool is_sensitive_category(const std::string& c) {
  const auto& s = sensitivity::default_sensitive_categories();
  return std::find(s.begin(), s.end(), c) != s.end();
}

// Random catalog over the ten corpus categories. Ground truth follows the
// category; every product carries a sensitivity score.
inline Catalog random_catalog(std::mt19937_64& rng, std::size_t per_category) {
  static const std::vector<std::string> kWords = {
      "alpha", "bravo", "cedar", "delta", "ember", "fjord", "gamma", "harbor", "iris",
      "jade",  "kilo",  "lumen", "mango", "nova",  "onyx",  "pixel", "quartz", "raven"};
  std::uniform_int_distribution<std::size_t> word(0, kWords.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Catalog catalog;
  const auto& cats = corpus_categories();
  for (std::size_t c = 0; c < cats.size(); ++c) {
    for (std::size_t i = 0; i < per_category; ++i) {
      Product p;
      p.id = "P" + std::to_string(c) + "-" + std::to_string(i);
      p.main_category = cats[c];
      p.title = kWords[word(rng)] + " " + kWords[word(rng)] + " item " + p.id;
      p.features = {kWords[word(rng)] + " feature", cats[c] + " line"};
      p.description = {"made of " + kWords[word(rng)]};
      const bool sensitive = is_sensitive_category(cats[c]);
      p.ground_truth_sensitive = sensitive;
      p.sensitivity_score = sensitive ? 0.5 + 0.5 * unit(rng) : 0.4 * unit(rng);
      catalog.add(std::move(p));
    }
  }
  return catalog;
}

// Random histories of `window` distinct items drawn from the catalog.
inline std::vector<PurchaseHistory> random_histories(std::mt19937_64& rng, const Catalog& catalog,
                                                     std::size_t users, std::size_t window) {
  std::vector<PurchaseHistory> out;
  const auto& products = catalog.products();
  for (std::size_t u = 0; u < users; ++u) {
    std::vector<std::size_t> idx(products.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    PurchaseHistory h;
    h.user_id = "u" + std::to_string(1000 + u);
    for (std::size_t i = 0; i < window; ++i) h.items.push_back(products[idx[i]]);
    h.target = products[idx[window]];
    out.push_back(std::move(h));
  }
  return out;
}

// Linearly separable labelled texts: sensitive ones contain "insulin".
inline std::vector<sensitivity::LabeledText> separable_fixture(std::size_t n, uint64_t seed) {
  static const std::vector<std::string> kFiller = {
      "cotton", "steel", "blue", "large", "compact", "travel", "kitchen", "garden", "classic",
      "modern", "set", "pack", "deluxe", "mini", "pro", "home", "office", "outdoor"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, kFiller.size() - 1);
  std::vector<sensitivity::LabeledText> out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool sensitive = i % 3 == 0;
    std::string text = "Title: ";
    for (int w = 0; w < 5; ++w) text += kFiller[pick(rng)] + " ";
    if (sensitive) text += "insulin ";
    text += "| Description: " + kFiller[pick(rng)] + " " + kFiller[pick(rng)];
    out.push_back({{text}, sensitive});
  }
  return out;
}

// Trainer settings used by the tests on the separable fixture. The default
// learning rate suits a pretrained transformer, not a model starting at zero.
inline sensitivity::TrainerOptions fast_trainer_options(uint64_t seed = 1) {
  sensitivity::TrainerOptions o;
  o.hyper.learning_rate = 0.2;
  o.hyper.epochs = 15;
  o.hyper.seed = seed;
  return o;
}

// Central finite-difference gradient of the summed focal loss with respect to
// the model weights followed by the bias (last element).
inline std::vector<double> finite_difference_gradient(
    const sensitivity::LogisticModel& model,
    std::span<const sensitivity::SparseExample> examples,
    const sensitivity::FocalLossParams& params, double h = 1e-5) {
  std::vector<double> g;
  auto probe = [&](auto&& nudge) {
    sensitivity::LogisticModel plus = model, minus = model;
    nudge(plus, h);
    nudge(minus, -h);
    g.push_back((sensitivity::model_focal_loss(plus, examples, params) -
                 sensitivity::model_focal_loss(minus, examples, params)) /
                (2.0 * h));
  };
  for (std::size_t j = 0; j < model.weights.size(); ++j) {
    probe([j](sensitivity::LogisticModel& m, double d) { m.weights[j] += d; });
  }
  probe([](sensitivity::LogisticModel& m, double d) { m.bias += d; });
  return g;
}

// Random small logistic model with random sparse examples.
struct GradientInstance {
  sensitivity::LogisticModel model;
  std::vector<sensitivity::SparseExample> examples;
  sensitivity::FocalLossParams params;
};

inline GradientInstance random_gradient_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<uint32_t> dims(2, 10);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GradientInstance in;
  const uint32_t d = dims(rng);
  for (uint32_t j = 0; j < d; ++j) in.model.weights.push_back(normal(rng));
  in.model.bias = normal(rng);
  const int n = std::uniform_int_distribution<int>(1, 12)(rng);
  for (int i = 0; i < n; ++i) {
    sensitivity::SparseExample ex;
    for (uint32_t j = 0; j < d; ++j) {
      if (unit(rng) < 0.5) ex.features.push_back(j);
    }
    ex.label = unit(rng) < 0.4;
    in.examples.push_back(std::move(ex));
  }
  in.params.gamma = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
  in.params.class_weights = {0.5 + unit(rng), 0.5 + 2.0 * unit(rng)};
  return in;
}

// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(std::max(na, nb));
  return denom == 0 ? 0.0 : std::sqrt(diff) / denom;
}

// Flags products whose per-item score exceeds `cut`; stands in for a trained
// scorer without needing a model file.
class ScoreFieldScorer final : public sensitivity::SensitivityScorer {
 public:
  explicit ScoreFieldScorer(double threshold = 0.5) : threshold_(threshold) {}
  double threshold() const override { return threshold_; }
  std::string identity() const override { return "score_field"; }
  std::vector<double> probabilities(std::span<const Product> products) const override {
    std::vector<double> out;
    for (const auto& p : products) out.push_back(p.sensitivity_score.value_or(0.0));
    return out;
  }

 private:
  double threshold_;
};

struct World {
  std::shared_ptr<Catalog> catalog;
  std::shared_ptr<retrieval::HashEmbeddingProvider> provider;
  std::shared_ptr<retrieval::VectorIndex> index;
  std::vector<PurchaseHistory> histories;
};

inline World make_world(uint64_t seed, std::size_t per_category = 12, std::size_t users = 6,
                        std::size_t window = 20, std::size_t dimension = 64) {
  std::mt19937_64 rng(seed);
  World w;
  w.catalog = std::make_shared<Catalog>(random_catalog(rng, per_category));
  w.provider = std::make_shared<retrieval::HashEmbeddingProvider>(dimension);
  w.index = std::make_shared<retrieval::VectorIndex>(retrieval::build_index(*w.catalog, *w.provider));
  w.histories = random_histories(rng, *w.catalog, users, window);
  return w;
}

inline gateway::ChatBackendConfig retrieval_backend(bool same_category = true) {
  gateway::ChatBackendConfig c;
  c.kind = gateway::BackendKind::kMockRetrieval;
  c.same_category = same_category;
  return c;
}

// A valid config for `scheme` on mock retrieval backends.
inline pipeline::ExperimentConfig scheme_config(pipeline::Scheme scheme, std::size_t n_total = 10) {
  pipeline::ExperimentConfig c;
  c.scheme = scheme;
  c.run_id = std::string(pipeline::to_string(scheme));
  c.n_total = n_total;
  if (pipeline::uses_server_leg(scheme)) c.server_backend = retrieval_backend();
  if (pipeline::uses_local_leg(scheme)) c.local_backend = retrieval_backend();
  if (pipeline::uses_obfuscator(scheme)) {
    sensitivity::ScorerConfig s;
    if (pipeline::is_categorical(scheme)) {
      s.kind = sensitivity::ScorerKind::kCategorical;
    } else {
      s.kind = sensitivity::ScorerKind::kTrained;
      s.model_path = "in-memory";
      s.threshold = 0.5;
    }
    c.scorer = s;
  }
  c.validate();
  return c;
}

// Resources for `cfg` over `w`. Context-aware schemes get a ScoreFieldScorer;
// `server`/`local` override the configured clients when given.
inline pipeline::RunResources world_resources(const pipeline::ExperimentConfig& cfg, const World& w,
                                              std::shared_ptr<gateway::ChatClient> server = nullptr,
                                              std::shared_ptr<gateway::ChatClient> local = nullptr) {
  pipeline::RunResources r;
  r.catalog = w.catalog;
  r.index = w.index;
  r.provider = w.provider;
  const gateway::RetrievalContext ctx{w.catalog, w.index, w.provider};
  if (pipeline::uses_obfuscator(cfg.scheme)) {
    if (pipeline::is_categorical(cfg.scheme)) {
      r.scorer = sensitivity::make_scorer(*cfg.scorer);
    } else {
      r.scorer = std::make_shared<ScoreFieldScorer>(cfg.scorer->threshold);
    }
  }
  if (pipeline::uses_server_leg(cfg.scheme)) {
    r.server = server ? server : gateway::make_chat_client(*cfg.server_backend, ctx);
  }
  if (pipeline::uses_local_leg(cfg.scheme)) {
    r.local = local ? local : gateway::make_chat_client(*cfg.local_backend, ctx);
  }
  return r;
}

}  // namespace privrec::test
